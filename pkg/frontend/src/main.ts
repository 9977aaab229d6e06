/**
 * Playground UI wiring: load an image (and optional ground truth), click
 * corrections, watch the propagated mask update, tune adaptation, undo.
 *
 * Left click = positive correction, right click = negative. Shortcuts:
 * U undo, R reset, [ and ] adjust overlay opacity.
 */

import { ApiError, SessionApi, type SessionStateDto } from './api.js';
import { canvasToCell, renderScene } from './canvas.js';
import { buildPanel, showPanelError } from './config_panel.js';
import { UISessionState } from './state.js';

const api = new SessionApi('');
const state = new UISessionState();

let imageFile: File | null = null;
let gtFile: File | null = null;
let imageBitmap: ImageBitmap | null = null;
let cursor: { row: number; col: number } | null = null;
let clickRadius = 2;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>('toast');
  box.textContent = message;
  box.classList.add('visible');
  setTimeout(() => box.classList.remove('visible'), 4000);
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return String(err);
}

function render(): void {
  const canvas = el<HTMLCanvasElement>('scene');
  const dto = state.dto;
  renderScene(canvas, {
    image: imageBitmap,
    maskRle: dto?.mask_rle ?? null,
    clicks: dto?.clicks ?? [],
    width: dto?.width ?? (imageBitmap?.width ?? 64),
    height: dto?.height ?? (imageBitmap?.height ?? 64),
    zoom: state.view.zoom,
    overlayAlpha: state.view.overlayAlpha,
    cursor: cursor
      ? { ...cursor, radius: clickRadius, positive: true }
      : null,
  });
  el<HTMLSpanElement>('iou-readout').textContent =
    dto?.iou != null ? `IoU ${dto.iou.toFixed(3)}` : 'IoU: no ground truth';
  el<HTMLSpanElement>('click-count').textContent =
    `${dto?.click_count ?? 0} clicks`;
  el<HTMLButtonElement>('undo').disabled =
    !dto || dto.click_count === 0 || state.view.pending;
  el<HTMLButtonElement>('reset').disabled = !dto || state.view.pending;
}

async function rebuildBitmap(dto: SessionStateDto): Promise<void> {
  if (!imageFile) return;
  const raw = await createImageBitmap(imageFile);
  // The engine may have resized the image; display at engine resolution.
  imageBitmap = await createImageBitmap(raw, {
    resizeWidth: dto.width,
    resizeHeight: dto.height,
    resizeQuality: 'pixelated',
  });
}

async function createSession(): Promise<void> {
  if (!imageFile) {
    toast('load an image first');
    return;
  }
  const dto = await state.mutate(
    () => api.createSession(imageFile!, { gt: gtFile ?? undefined }),
    (err) => toast(describeError(err)),
  );
  if (dto) {
    clickRadius = Number(
      (dto.config as { click_radius?: number }).click_radius ?? 2,
    );
    await rebuildBitmap(dto);
    render();
  }
}

function wireCanvas(): void {
  const canvas = el<HTMLCanvasElement>('scene');
  canvas.addEventListener('contextmenu', (ev) => ev.preventDefault());
  canvas.addEventListener('mousemove', (ev) => {
    cursor = canvasToCell(canvas, state.view.zoom, ev.offsetX, ev.offsetY);
    render();
  });
  canvas.addEventListener('mouseleave', () => {
    cursor = null;
    render();
  });
  canvas.addEventListener('mousedown', (ev) => {
    const sid = state.sessionId;
    if (!sid || state.view.pending) return;
    const cell = canvasToCell(canvas, state.view.zoom, ev.offsetX, ev.offsetY);
    if (!cell) return;
    const positive = ev.button !== 2;
    void state.mutate(
      () => api.click(sid, cell.row, cell.col, positive),
      (err) => toast(describeError(err)),
    ).then(() => render());
  });
}

function wireControls(): void {
  el<HTMLInputElement>('image-file').addEventListener('change', (ev) => {
    imageFile = (ev.target as HTMLInputElement).files?.[0] ?? null;
  });
  el<HTMLInputElement>('gt-file').addEventListener('change', (ev) => {
    gtFile = (ev.target as HTMLInputElement).files?.[0] ?? null;
  });
  el<HTMLButtonElement>('create').addEventListener('click', () => {
    void createSession();
  });
  el<HTMLButtonElement>('undo').addEventListener('click', () => {
    const sid = state.sessionId;
    if (!sid) return;
    void state.mutate(
      () => api.undo(sid),
      (err) => toast(describeError(err)),
    ).then(() => render());
  });
  el<HTMLButtonElement>('reset').addEventListener('click', () => {
    void createSession();
  });
  buildPanel(el<HTMLDivElement>('config-panel'), {
    onApply: (patch, replay) => {
      const sid = state.sessionId;
      if (!sid) return;
      void state.mutate(
        () => api.patchConfig(sid, patch, replay),
        (err) => {
          showPanelError(el<HTMLDivElement>('config-panel'), describeError(err));
        },
      ).then(() => render());
    },
  });
  document.addEventListener('keydown', (ev) => {
    if (ev.key === 'u' || ev.key === 'U') el<HTMLButtonElement>('undo').click();
    if (ev.key === 'r' || ev.key === 'R') el<HTMLButtonElement>('reset').click();
    if (ev.key === '[') {
      state.setView({ overlayAlpha: Math.max(0, state.view.overlayAlpha - 0.1) });
    }
    if (ev.key === ']') {
      state.setView({ overlayAlpha: Math.min(1, state.view.overlayAlpha + 0.1) });
    }
  });
}

export function boot(): void {
  wireControls();
  wireCanvas();
  state.subscribe(() => render());
  render();
}

if (typeof document !== 'undefined' && document.getElementById('scene')) {
  boot();
}
