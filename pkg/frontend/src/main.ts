import { api, BankInfo, JobSnapshot } from './api';
import { EditPanel } from './editPanel';
import { JobView, statusText } from './jobView';
import { ComparePanel } from './panels';
import { pollJob } from './poll';

const POLL_MS = 500;

function jobIdFromHash(): string | null {
  const match = /#job=([A-Za-z0-9_-]+)/.exec(location.hash);
  return match ? match[1] : null;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function track(jobId: string, bank: BankInfo): Promise<void> {
  location.hash = `job=${jobId}`;
  const status = el<HTMLElement>('status');
  const bar = el<HTMLProgressElement>('progress');
  const studio = el<HTMLElement>('studio');
  studio.replaceChildren();

  const view = new JobView(jobId);
  const panel = new ComparePanel();
  const edits = new EditPanel(jobId, bank.directions, panel);
  studio.append(panel.root, edits.root);

  api
    .jobImage(jobId, 'target')
    .then((blob) => panel.setImage('target', blob))
    .catch(() => {
      // target image follows shortly after job creation; non-fatal
    });

  const render = (snap: JobSnapshot) => {
    view.update(snap);
    bar.value = view.progressFraction;
    status.textContent = statusText(view);
  };

  const final = await pollJob(jobId, { intervalMs: POLL_MS, onUpdate: render });
  if (final.state !== 'done') return;

  const recon = await api.jobImage(jobId, 'reconstruction');
  panel.setImage('reconstruction', recon);
  // the edited pane starts as the strength-0 view, which is the reconstruction
  panel.setImage('edited', recon);
  edits.enable();
}

async function start(): Promise<void> {
  const status = el<HTMLElement>('status');
  const form = el<HTMLFormElement>('upload-form');
  const file = el<HTMLInputElement>('file-input');
  const iters = el<HTMLInputElement>('iters-input');
  const seed = el<HTMLInputElement>('seed-input');

  let bank: BankInfo;
  try {
    [bank] = await api.banks();
  } catch (err) {
    status.textContent = `service unreachable: ${err instanceof Error ? err.message : err}`;
    return;
  }

  form.addEventListener('submit', (evt) => {
    evt.preventDefault();
    const target = file.files?.[0];
    if (!target) return;
    api
      .createJob(target, { iters: Number(iters.value), seed: Number(seed.value) })
      .then((snap) => track(snap.id, bank))
      .catch((err) => {
        status.textContent = `upload failed: ${err instanceof Error ? err.message : err}`;
      });
  });

  const resume = jobIdFromHash();
  if (resume) await track(resume, bank);
}

void start();
