/**
 * UI session state: the latest server DTO plus local view settings.
 *
 * Mutations are funneled through a per-session queue so at most one
 * mutating request is in flight; the rendered state is always a pure
 * projection of the last DTO the server returned.
 */

import type { SessionStateDto } from './api.js';

export interface ViewState {
  zoom: number;
  overlayAlpha: number;
  pending: boolean;
}

export type Listener = (state: UISessionState) => void;

export class UISessionState {
  dto: SessionStateDto | null = null;
  view: ViewState = { zoom: 6, overlayAlpha: 0.45, pending: false };

  private listeners: Listener[] = [];
  private chain: Promise<void> = Promise.resolve();

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this);
  }

  applyDto(dto: SessionStateDto): void {
    this.dto = dto;
    this.emit();
  }

  setView(patch: Partial<ViewState>): void {
    this.view = { ...this.view, ...patch };
    this.emit();
  }

  get sessionId(): string | null {
    return this.dto?.session_id ?? null;
  }

  /**
   * Queue a mutating request. Requests run strictly one at a time in
   * submission order; each resolves with the DTO it applied (or null if
   * the mutation failed, after reporting via onError).
   */
  mutate(
    operation: () => Promise<SessionStateDto>,
    onError?: (err: unknown) => void,
  ): Promise<SessionStateDto | null> {
    const run = this.chain.then(async () => {
      this.setView({ pending: true });
      try {
        const dto = await operation();
        this.applyDto(dto);
        return dto;
      } catch (err) {
        if (onError) onError(err);
        return null;
      } finally {
        this.setView({ pending: false });
      }
    });
    this.chain = run.then(() => undefined);
    return run;
  }
}
