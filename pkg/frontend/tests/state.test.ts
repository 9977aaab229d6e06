import { describe, expect, it } from 'vitest';

import type { SessionStateDto } from '../src/api.js';
import { UISessionState } from '../src/state.js';

function dto(clicks: number): SessionStateDto {
  return {
    session_id: 's1',
    height: 4,
    width: 4,
    click_count: clicks,
    clicks: [],
    config: {},
    mask_rle: [[4], [4], [4], [4]],
    iou: null,
    iou_history: [],
    bbox: null,
  };
}

describe('UISessionState', () => {
  it('is a pure projection of the latest DTO', () => {
    const state = new UISessionState();
    const seen: number[] = [];
    state.subscribe((s) => seen.push(s.dto?.click_count ?? -1));
    state.applyDto(dto(0));
    state.applyDto(dto(2));
    expect(seen).toEqual([0, 2]);
    expect(state.sessionId).toBe('s1');
  });

  it('runs mutations strictly one at a time, in order', async () => {
    const state = new UISessionState();
    const log: string[] = [];
    const slow = () =>
      new Promise<SessionStateDto>((resolve) => {
        log.push('slow-start');
        setTimeout(() => {
          log.push('slow-end');
          resolve(dto(1));
        }, 30);
      });
    const fast = () => {
      log.push('fast-start');
      return Promise.resolve(dto(2));
    };
    const first = state.mutate(slow);
    const second = state.mutate(fast);
    await Promise.all([first, second]);
    expect(log).toEqual(['slow-start', 'slow-end', 'fast-start']);
    expect(state.dto?.click_count).toBe(2);
  });

  it('reports pending while a mutation is in flight', async () => {
    const state = new UISessionState();
    let sawPending = false;
    state.subscribe((s) => {
      if (s.view.pending) sawPending = true;
    });
    await state.mutate(() => Promise.resolve(dto(1)));
    expect(sawPending).toBe(true);
    expect(state.view.pending).toBe(false);
  });

  it('keeps the previous DTO and surfaces the error on failure', async () => {
    const state = new UISessionState();
    state.applyDto(dto(1));
    let reported: unknown = null;
    const result = await state.mutate(
      () => Promise.reject(new Error('nope')),
      (err) => {
        reported = err;
      },
    );
    expect(result).toBeNull();
    expect((reported as Error).message).toBe('nope');
    expect(state.dto?.click_count).toBe(1);
  });

  it('continues the queue after a failed mutation', async () => {
    const state = new UISessionState();
    await state.mutate(() => Promise.reject(new Error('boom')), () => {});
    const result = await state.mutate(() => Promise.resolve(dto(3)));
    expect(result?.click_count).toBe(3);
  });
});
