/**
 * Typed client for the explorer service endpoints. The fetch function is
 * injectable so controller tests can run against a scripted fake server.
 */

import type { AgreementPayload, Axis, Manifest, SlicePayload, Telemetry } from './types.js';

export type FetchLike = (url: string) => Promise<Response>;

function telemetryFromHeaders(headers: Headers): Telemetry {
  return {
    kept: Number(headers.get('X-Keep') ?? 0),
    loaded: Number(headers.get('X-Load') ?? 0),
    discarded: Number(headers.get('X-Discard') ?? 0),
    bytesRead: Number(headers.get('X-Bytes-Read') ?? 0),
    millis: Number(headers.get('X-Switch-Ms') ?? 0),
  };
}

async function ensureOk(resp: Response, what: string): Promise<Response> {
  if (!resp.ok) {
    let detail = `${resp.status}`;
    try {
      detail = `${resp.status}: ${(await resp.json()).detail ?? ''}`;
    } catch {
      /* non-JSON error body */
    }
    throw new Error(`${what} failed (${detail})`);
  }
  return resp;
}

export class ExplorerClient {
  readonly session: string;
  private fetchFn: FetchLike;
  private base: string;

  constructor(options: { base?: string; session?: string; fetchFn?: FetchLike } = {}) {
    this.base = options.base ?? '';
    this.session = options.session ?? `viewer-${Math.random().toString(36).slice(2, 10)}`;
    this.fetchFn = options.fetchFn ?? ((url) => fetch(url));
  }

  async manifest(): Promise<Manifest> {
    const resp = await ensureOk(await this.fetchFn(`${this.base}/api/manifest`), 'manifest');
    return (await resp.json()) as Manifest;
  }

  async slice(r: number, t: number, axis: Axis, index: number): Promise<SlicePayload> {
    const url =
      `${this.base}/api/slice?session=${this.session}&r=${r}&t=${t}` +
      `&axis=${axis}&index=${index}`;
    const resp = await ensureOk(await this.fetchFn(url), 'slice');
    const shape = (resp.headers.get('X-Slice-Shape') ?? '').split(',').map(Number);
    const data = new Float32Array(await resp.arrayBuffer());
    return {
      data,
      width: shape[0] || 0,
      height: shape[1] || 0,
      telemetry: telemetryFromHeaders(resp.headers),
    };
  }

  async agreement(r: number, t: number): Promise<AgreementPayload> {
    const url = `${this.base}/api/agreement?session=${this.session}&r=${r}&t=${t}`;
    const resp = await ensureOk(await this.fetchFn(url), 'agreement');
    const dims = (resp.headers.get('X-Grid-Dims') ?? '0,0,0').split(',').map(Number);
    const summary = JSON.parse(resp.headers.get('X-Summary') ?? '{}');
    return {
      values: new Float32Array(await resp.arrayBuffer()),
      gridDims: [dims[0], dims[1], dims[2]],
      min: Number(summary.min ?? NaN),
      mean: Number(summary.mean ?? NaN),
    };
  }
}
