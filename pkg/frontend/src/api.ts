/**
 * Typed client for the playground session API.
 *
 * Works in the browser and under node 20 (global fetch/FormData/Blob).
 * The UI never computes masks itself; every state change round-trips
 * through these calls.
 */

export interface ClickDto {
  row: number;
  col: number;
  positive: boolean;
  radius: number;
}

export interface SessionStateDto {
  session_id: string;
  height: number;
  width: number;
  click_count: number;
  clicks: ClickDto[];
  config: Record<string, unknown>;
  mask_rle: number[][];
  iou: number | null;
  iou_history: number[];
  bbox: number[] | null;
}

export interface AdaptationPatch {
  theta_xi?: number;
  theta_mu?: number;
  key_iters?: number;
  value_iters?: number;
  anchor?: string;
}

export interface CreateOptions {
  gt?: Blob;
  bbox?: [number, number, number, number];
  config?: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseResponse(resp: Response): Promise<SessionStateDto> {
  const body = await resp.json();
  if (!resp.ok) {
    const err = body?.error ?? {};
    throw new ApiError(resp.status, err.code ?? 'unknown', err.message ?? 'request failed');
  }
  return body as SessionStateDto;
}

export class SessionApi {
  constructor(private readonly baseUrl: string = '') {}

  async createSession(image: Blob, opts: CreateOptions = {}): Promise<SessionStateDto> {
    const form = new FormData();
    form.append('image', image, 'image.png');
    if (opts.gt) form.append('gt', opts.gt, 'gt.png');
    const config: Record<string, unknown> = { ...(opts.config ?? {}) };
    if (opts.bbox) config.bbox = opts.bbox;
    form.append('config', JSON.stringify(config));
    const resp = await fetch(`${this.baseUrl}/api/session`, {
      method: 'POST',
      body: form,
    });
    return parseResponse(resp);
  }

  async getState(sessionId: string): Promise<SessionStateDto> {
    return parseResponse(await fetch(`${this.baseUrl}/api/session/${sessionId}`));
  }

  async click(
    sessionId: string,
    row: number,
    col: number,
    positive: boolean,
  ): Promise<SessionStateDto> {
    const resp = await fetch(`${this.baseUrl}/api/session/${sessionId}/click`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ row, col, positive }),
    });
    return parseResponse(resp);
  }

  async undo(sessionId: string): Promise<SessionStateDto> {
    const resp = await fetch(`${this.baseUrl}/api/session/${sessionId}/undo`, {
      method: 'POST',
    });
    return parseResponse(resp);
  }

  async patchConfig(
    sessionId: string,
    patch: AdaptationPatch,
    replay: boolean,
  ): Promise<SessionStateDto> {
    const resp = await fetch(`${this.baseUrl}/api/session/${sessionId}/config`, {
      method: 'PATCH',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ config: patch, replay }),
    });
    return parseResponse(resp);
  }
}
