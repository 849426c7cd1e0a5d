/**
 * Viewer state machine. The reducer is pure: (state, event, manifest) -> state,
 * so navigation clamping and the agreement toggle are testable without a
 * server or a DOM.
 */

import type { Axis, Manifest, Telemetry } from './types.js';
import { axisExtent } from './types.js';

export type Direction = 't+' | 't-' | 'r+' | 'r-';

export interface ViewerState {
  run: number;
  timestep: number;
  axis: Axis;
  index: number;
  colormap: string;
  agreement: boolean;
  telemetry: Telemetry | null;
  status: string;
  outOfRange: boolean;
}

export type ViewerEvent =
  | { kind: 'navigate'; direction: Direction }
  | { kind: 'set-slice'; axis: Axis; index: number }
  | { kind: 'toggle-agreement' }
  | { kind: 'set-colormap'; name: string }
  | { kind: 'telemetry'; telemetry: Telemetry }
  | { kind: 'status'; message: string }
  | { kind: 'out-of-range'; present: boolean };

export function initialState(manifest: Manifest): ViewerState {
  return {
    run: 0,
    timestep: 0,
    axis: 'z',
    index: Math.floor(manifest.dims[2] / 2),
    colormap: 'viridis',
    agreement: false,
    telemetry: null,
    status: 'ready',
    outOfRange: false,
  };
}

function clamp(value: number, upper: number): number {
  return Math.max(0, Math.min(upper - 1, value));
}

export function reduce(state: ViewerState, event: ViewerEvent, manifest: Manifest): ViewerState {
  switch (event.kind) {
    case 'navigate': {
      let { run, timestep } = state;
      if (event.direction === 't+') timestep += 1;
      if (event.direction === 't-') timestep -= 1;
      if (event.direction === 'r+') run += 1;
      if (event.direction === 'r-') run -= 1;
      run = clamp(run, manifest.runs);
      timestep = clamp(timestep, manifest.timesteps);
      if (run === state.run && timestep === state.timestep) return state;
      // navigation always lands back on the data view
      return { ...state, run, timestep, agreement: false };
    }
    case 'set-slice': {
      const index = clamp(event.index, axisExtent(manifest.dims, event.axis));
      if (event.axis === state.axis && index === state.index) return state;
      return { ...state, axis: event.axis, index };
    }
    case 'toggle-agreement':
      return { ...state, agreement: !state.agreement };
    case 'set-colormap':
      return { ...state, colormap: event.name };
    case 'telemetry':
      return { ...state, telemetry: event.telemetry };
    case 'status':
      return { ...state, status: event.message };
    case 'out-of-range':
      return { ...state, outOfRange: event.present };
  }
}
