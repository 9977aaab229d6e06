/**
 * Adaptation parameter panel.
 *
 * theta_mu rides a log-scale slider over [0.01, 1000] with detents at the
 * usual grid values; iteration counts are small integer ranges. Apply
 * PATCHes the config, optionally replaying the click history.
 */

import type { AdaptationPatch } from './api.js';

export const THETA_MU_GRID = [0.1, 1, 10, 100];
const LOG_MIN = Math.log10(0.01);
const LOG_MAX = Math.log10(1000);

export function sliderToThetaMu(position: number): number {
  // position in [0, 1]
  const value = 10 ** (LOG_MIN + position * (LOG_MAX - LOG_MIN));
  return Number(value.toPrecision(3));
}

export function thetaMuToSlider(value: number): number {
  const clamped = Math.min(1000, Math.max(0.01, value));
  return (Math.log10(clamped) - LOG_MIN) / (LOG_MAX - LOG_MIN);
}

export interface PanelValues {
  theta_mu: number;
  theta_xi: number;
  value_iters: number;
  key_iters: number;
  replay: boolean;
}

export function validatePanel(values: PanelValues): string | null {
  if (!(values.theta_mu >= 0)) return 'theta_mu must be non-negative';
  if (!(values.theta_xi >= 0)) return 'theta_xi must be non-negative';
  if (values.value_iters < 0 || values.value_iters > 10) {
    return 'value_iters must be between 0 and 10';
  }
  if (values.key_iters < 0 || values.key_iters > 3) {
    return 'key_iters must be between 0 and 3';
  }
  return null;
}

export function panelToPatch(values: PanelValues): AdaptationPatch {
  return {
    theta_mu: values.theta_mu,
    theta_xi: values.theta_xi,
    value_iters: values.value_iters,
    key_iters: values.key_iters,
  };
}

export interface PanelHooks {
  onApply: (patch: AdaptationPatch, replay: boolean) => void;
}

export function buildPanel(root: HTMLElement, hooks: PanelHooks): () => PanelValues {
  root.innerHTML = `
    <div class="panel-row">
      <label>propagation strength 1/&theta;<sub>&mu;</sub></label>
      <input type="range" id="theta-mu" min="0" max="1" step="0.001" value="${thetaMuToSlider(0.5)}">
      <span id="theta-mu-value">0.5</span>
    </div>
    <div class="panel-row">
      <label>value iterations</label>
      <input type="number" id="value-iters" min="0" max="10" value="5">
    </div>
    <div class="panel-row">
      <label>key iterations</label>
      <input type="number" id="key-iters" min="0" max="3" value="0">
    </div>
    <div class="panel-row">
      <label>key anchor &theta;<sub>&xi;</sub></label>
      <input type="number" id="theta-xi" min="0" step="0.001" value="0">
    </div>
    <div class="panel-row">
      <label><input type="checkbox" id="replay" checked> replay clicks</label>
      <button id="apply-config">apply</button>
    </div>
    <div class="panel-error" id="panel-error"></div>
  `;
  const slider = root.querySelector<HTMLInputElement>('#theta-mu')!;
  const sliderLabel = root.querySelector<HTMLElement>('#theta-mu-value')!;
  const errorBox = root.querySelector<HTMLElement>('#panel-error')!;

  const read = (): PanelValues => ({
    theta_mu: sliderToThetaMu(Number(slider.value)),
    theta_xi: Number(root.querySelector<HTMLInputElement>('#theta-xi')!.value),
    value_iters: Number(root.querySelector<HTMLInputElement>('#value-iters')!.value),
    key_iters: Number(root.querySelector<HTMLInputElement>('#key-iters')!.value),
    replay: root.querySelector<HTMLInputElement>('#replay')!.checked,
  });

  slider.addEventListener('input', () => {
    sliderLabel.textContent = String(sliderToThetaMu(Number(slider.value)));
  });
  root.querySelector('#apply-config')!.addEventListener('click', () => {
    const values = read();
    const problem = validatePanel(values);
    errorBox.textContent = problem ?? '';
    if (!problem) hooks.onApply(panelToPatch(values), values.replay);
  });
  return read;
}

export function showPanelError(root: HTMLElement, message: string): void {
  const box = root.querySelector<HTMLElement>('#panel-error');
  if (box) box.textContent = message;
}
