"""Drive the HTTP service end to end without opening a port: upload a target,
poll the job, fetch the reconstruction, request edits at a few strengths.

The same app serves real traffic via `makeitso serve`; TestClient just mounts
it in-process. Every finished job is a plain result directory on disk, so
`makeitso edit --result <data_root>/<job_id> ...` works on it too.
"""

import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from makeitso import checkpoint
from makeitso.generator import GeneratorConfig, init_toy_generator
from makeitso.harness import pattern_target
from makeitso.imageio import encode_png
from makeitso.service import create_app

root = Path(tempfile.mkdtemp(prefix="makeitso-demo-"))
ckpt_path = root / "gen.misockpt"
checkpoint.save_checkpoint(init_toy_generator(0, GeneratorConfig(resolution=16)),
                           ckpt_path)

app = create_app(data_root=str(root / "data"), checkpoint_path=str(ckpt_path))
with TestClient(app) as client:
    print(client.get("/api/version").json())

    png = encode_png(pattern_target(16, 1))
    job = client.post("/api/jobs",
                      files={"image": ("target.png", png, "image/png")},
                      data={"iters": "80", "seed": "0"}).json()
    print(f"job {job['id']} created: {job['state']}")

    while True:
        snap = client.get(f"/api/jobs/{job['id']}").json()
        p = snap["progress"]
        print(f"  {snap['state']:8s} {p['iteration']}/{p['total']}")
        if snap["state"] in ("done", "failed"):
            break
        time.sleep(0.2)

    recon = client.get(f"/api/jobs/{job['id']}/image",
                       params={"kind": "reconstruction"})
    (root / "reconstruction.png").write_bytes(recon.content)

    for strength in (0.0, 1.0, 2.0):
        img = client.post(f"/api/results/{job['id']}/edit",
                          json={"direction": "edit_00", "strength": strength})
        (root / f"edit_{strength:.0f}.png").write_bytes(img.content)
        same = "identical to reconstruction" if img.content == recon.content else "differs"
        print(f"  edit at strength {strength}: {same}")

print(f"artifacts in {root}")
