export type PaneName = 'target' | 'reconstruction' | 'edited';

const PANE_ORDER: PaneName[] = ['target', 'reconstruction', 'edited'];

interface Pane {
  img: HTMLImageElement;
  blob: Blob | null;
  url: string | null;
}

/**
 * Side-by-side comparison: target, reconstruction, edited. Each pane keeps
 * the PNG blob it currently shows; the browser only scales for display,
 * it never recomputes image data.
 */
export class ComparePanel {
  readonly root: HTMLElement;
  private panes = new Map<PaneName, Pane>();

  constructor() {
    this.root = document.createElement('div');
    this.root.className = 'compare-panel';
    for (const name of PANE_ORDER) {
      const figure = document.createElement('figure');
      figure.className = `pane pane-${name}`;
      const img = document.createElement('img');
      img.alt = name;
      const caption = document.createElement('figcaption');
      caption.textContent = name;
      figure.append(img, caption);
      this.root.append(figure);
      this.panes.set(name, { img, blob: null, url: null });
    }
  }

  setImage(name: PaneName, blob: Blob): void {
    const pane = this.panes.get(name)!;
    if (pane.url) URL.revokeObjectURL(pane.url);
    pane.blob = blob;
    pane.url = URL.createObjectURL(blob);
    pane.img.src = pane.url;
  }

  blobOf(name: PaneName): Blob | null {
    return this.panes.get(name)!.blob;
  }
}
