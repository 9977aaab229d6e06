/**
 * Canvas rendering: image, mask overlay, click markers, cursor preview.
 */

import type { ClickDto } from './api.js';
import { decodeMaskRle, maskOverlayPixels } from './rle.js';

export const POSITIVE_COLOR = 'rgba(46, 204, 113, 0.95)';
export const NEGATIVE_COLOR = 'rgba(231, 76, 60, 0.95)';
const OVERLAY_TINT: [number, number, number] = [66, 133, 244];

export interface RenderInputs {
  image: HTMLImageElement | ImageBitmap | null;
  maskRle: number[][] | null;
  clicks: ClickDto[];
  width: number;
  height: number;
  zoom: number;
  overlayAlpha: number;
  cursor: { row: number; col: number; radius: number; positive: boolean } | null;
}

export function renderScene(canvas: HTMLCanvasElement, inputs: RenderInputs): void {
  const { width, height, zoom } = inputs;
  canvas.width = width * zoom;
  canvas.height = height * zoom;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (inputs.image) {
    ctx.drawImage(inputs.image, 0, 0, canvas.width, canvas.height);
  }
  if (inputs.maskRle) {
    drawOverlay(ctx, inputs.maskRle, width, height, zoom, inputs.overlayAlpha);
  }
  for (const click of inputs.clicks) {
    drawMarker(ctx, click, zoom);
  }
  if (inputs.cursor) {
    drawCursorPreview(ctx, inputs.cursor, zoom);
  }
}

function drawOverlay(
  ctx: CanvasRenderingContext2D,
  maskRle: number[][],
  width: number,
  height: number,
  zoom: number,
  alpha: number,
): void {
  // Render-safe on malformed payloads: skip the overlay, keep the image.
  let mask: Uint8Array;
  try {
    mask = decodeMaskRle(maskRle, width);
  } catch {
    return;
  }
  const pixels = maskOverlayPixels(mask, [
    OVERLAY_TINT[0],
    OVERLAY_TINT[1],
    OVERLAY_TINT[2],
    Math.round(alpha * 255),
  ]);
  const off = new OffscreenCanvas(width, height);
  const offCtx = off.getContext('2d');
  if (!offCtx) return;
  offCtx.putImageData(new ImageData(pixels, width, height), 0, 0);
  ctx.drawImage(off, 0, 0, width * zoom, height * zoom);
}

function drawMarker(ctx: CanvasRenderingContext2D, click: ClickDto, zoom: number): void {
  const x = (click.col + 0.5) * zoom;
  const y = (click.row + 0.5) * zoom;
  ctx.beginPath();
  ctx.arc(x, y, Math.max(3, zoom * 0.6), 0, 2 * Math.PI);
  ctx.fillStyle = click.positive ? POSITIVE_COLOR : NEGATIVE_COLOR;
  ctx.fill();
  ctx.lineWidth = 1.5;
  ctx.strokeStyle = 'white';
  ctx.stroke();
}

function drawCursorPreview(
  ctx: CanvasRenderingContext2D,
  cursor: { row: number; col: number; radius: number; positive: boolean },
  zoom: number,
): void {
  const x = (cursor.col + 0.5) * zoom;
  const y = (cursor.row + 0.5) * zoom;
  ctx.beginPath();
  ctx.arc(x, y, (cursor.radius + 0.5) * zoom, 0, 2 * Math.PI);
  ctx.setLineDash([4, 3]);
  ctx.lineWidth = 1.5;
  ctx.strokeStyle = cursor.positive ? POSITIVE_COLOR : NEGATIVE_COLOR;
  ctx.stroke();
  ctx.setLineDash([]);
}

/** Canvas pixel coordinates to mask (row, col), or null when outside. */
export function canvasToCell(
  canvas: { width: number; height: number },
  zoom: number,
  offsetX: number,
  offsetY: number,
): { row: number; col: number } | null {
  const col = Math.floor(offsetX / zoom);
  const row = Math.floor(offsetY / zoom);
  const width = Math.floor(canvas.width / zoom);
  const height = Math.floor(canvas.height / zoom);
  if (row < 0 || col < 0 || row >= height || col >= width) return null;
  return { row, col };
}
