/**
 * Glue between the pure state machine, the HTTP client, and the renderer.
 *
 * Every navigation event issues at most one slice request; responses carry
 * a sequence token so a stale in-flight request can never overwrite the
 * latest view (latest-wins supersession). Server errors land in the status
 * bar instead of throwing.
 */

import { ExplorerClient } from './api.js';
import { renderAgreementPlane, renderSlice, RenderedSlice } from './colormap.js';
import { initialState, reduce, ViewerEvent, ViewerState } from './state.js';
import type { AgreementPayload, Axis, Manifest, SlicePayload } from './types.js';

export interface ViewerHooks {
  onFrame?: (frame: RenderedSlice, state: ViewerState) => void;
  onState?: (state: ViewerState) => void;
}

export function agreementPlane(
  payload: AgreementPayload,
  axis: Axis,
  voxelIndex: number,
  blockDims: [number, number, number],
): { data: Float32Array; width: number; height: number } {
  const [gi, gj, gk] = payload.gridDims;
  const v = payload.values; // Fortran layout: i + gi*j + gi*gj*k
  if (axis === 'z') {
    const k = Math.min(Math.floor(voxelIndex / blockDims[2]), gk - 1);
    return { data: v.subarray(gi * gj * k, gi * gj * (k + 1)), width: gi, height: gj };
  }
  if (axis === 'y') {
    const j = Math.min(Math.floor(voxelIndex / blockDims[1]), gj - 1);
    const data = new Float32Array(gi * gk);
    for (let k = 0; k < gk; k++) {
      for (let i = 0; i < gi; i++) data[i + gi * k] = v[i + gi * j + gi * gj * k];
    }
    return { data, width: gi, height: gk };
  }
  const i = Math.min(Math.floor(voxelIndex / blockDims[0]), gi - 1);
  const data = new Float32Array(gj * gk);
  for (let k = 0; k < gk; k++) {
    for (let j = 0; j < gj; j++) data[j + gj * k] = v[i + gi * j + gi * gj * k];
  }
  return { data, width: gj, height: gk };
}

export class ViewerController {
  state: ViewerState;
  sliceRequests = 0;
  agreementRequests = 0;

  private seq = 0;
  private lastSlice: SlicePayload | null = null;

  constructor(
    private client: ExplorerClient,
    private manifest: Manifest,
    private hooks: ViewerHooks = {},
  ) {
    this.state = initialState(manifest);
  }

  /** Load and render the initial (0, 0) view. */
  async init(): Promise<void> {
    await this.fetchSlice();
  }

  async dispatch(event: ViewerEvent): Promise<void> {
    const before = this.state;
    this.apply(event);
    switch (event.kind) {
      case 'navigate':
        if (this.state !== before) await this.fetchSlice();
        break;
      case 'set-slice':
        if (this.state !== before) {
          if (this.state.agreement && this.state.axis === before.axis) {
            // same agreement payload, different plane: re-fetch not needed
            await this.fetchAgreement();
          } else {
            await this.fetchSlice();
          }
        }
        break;
      case 'toggle-agreement':
        if (this.state.agreement) {
          await this.fetchAgreement();
        } else {
          this.renderCachedSlice();
        }
        break;
      case 'set-colormap':
        this.renderCachedSlice();
        break;
      default:
        break;
    }
  }

  private apply(event: ViewerEvent): void {
    const next = reduce(this.state, event, this.manifest);
    if (next !== this.state) {
      this.state = next;
      this.hooks.onState?.(this.state);
    }
  }

  private async fetchSlice(): Promise<void> {
    const token = ++this.seq;
    const { run, timestep, axis, index } = this.state;
    this.sliceRequests += 1;
    try {
      const payload = await this.client.slice(run, timestep, axis, index);
      if (token !== this.seq) return; // superseded by a newer request
      this.lastSlice = payload;
      this.apply({ kind: 'telemetry', telemetry: payload.telemetry });
      this.apply({
        kind: 'status',
        message: `run ${run}, timestep ${timestep} (${axis}=${index})`,
      });
      this.renderCachedSlice();
    } catch (err) {
      if (token !== this.seq) return;
      this.apply({ kind: 'status', message: `${err instanceof Error ? err.message : err}` });
    }
  }

  private async fetchAgreement(): Promise<void> {
    const token = ++this.seq;
    const { run, timestep } = this.state;
    this.agreementRequests += 1;
    try {
      const payload = await this.client.agreement(run, timestep);
      if (token !== this.seq) return;
      const plane = agreementPlane(
        payload, this.state.axis, this.state.index, this.manifest.block_dims,
      );
      const frame = renderAgreementPlane(plane.data, plane.width, plane.height);
      const quantum = 1 / this.manifest.runs;
      this.apply({
        kind: 'status',
        message:
          `agreement at t=${timestep} vs run ${run}: ` +
          `min ${payload.min.toFixed(3)}, mean ${payload.mean.toFixed(3)} ` +
          `(steps of ${quantum.toFixed(3)})`,
      });
      this.hooks.onFrame?.(frame, this.state);
    } catch (err) {
      if (token !== this.seq) return;
      this.apply({ kind: 'status', message: `${err instanceof Error ? err.message : err}` });
    }
  }

  private renderCachedSlice(): void {
    if (!this.lastSlice || this.state.agreement) return;
    try {
      const frame = renderSlice(
        this.lastSlice.data,
        this.lastSlice.width,
        this.lastSlice.height,
        this.manifest.value_peak,
        this.state.colormap,
      );
      this.apply({ kind: 'out-of-range', present: frame.outOfRange });
      if (frame.outOfRange) {
        this.apply({ kind: 'status', message: 'out-of-bounds values present' });
      }
      this.hooks.onFrame?.(frame, this.state);
    } catch (err) {
      this.apply({ kind: 'status', message: `${err instanceof Error ? err.message : err}` });
    }
  }
}
