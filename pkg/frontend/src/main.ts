/**
 * Browser bootstrap: wires the keyboard to the controller and paints frames
 * onto the canvas. Keys: left/right = timestep, up/down = run, "a" toggles
 * the agreement overlay.
 */

import { ExplorerClient } from './api.js';
import { colormapNames, RenderedSlice } from './colormap.js';
import { ViewerController } from './controller.js';
import type { ViewerState } from './state.js';
import { axisExtent } from './types.js';

function element<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

async function start(): Promise<void> {
  const canvas = element<HTMLCanvasElement>('view');
  const ctx = canvas.getContext('2d');
  if (!ctx) throw new Error('2d canvas unavailable');

  const client = new ExplorerClient();
  const manifest = await client.manifest();
  element<HTMLSpanElement>('meta').textContent =
    `${manifest.runs} runs x ${manifest.timesteps} timesteps, ` +
    `${manifest.dims.join('x')} voxels, blocks ${manifest.block_dims.join('x')}, ` +
    `${manifest.reduction}, ${manifest.b_rem} unique blocks`;

  const paint = (frame: RenderedSlice, state: ViewerState): void => {
    canvas.width = frame.width;
    canvas.height = frame.height;
    const rgba = new Uint8ClampedArray(frame.pixels);
    ctx.putImageData(new ImageData(rgba, frame.width, frame.height), 0, 0);
    element<HTMLDivElement>('legend').textContent = state.agreement
      ? `agreement: red 0 .. green 1, quantized to 1/${manifest.runs}`
      : `data: 0 .. ${manifest.value_peak.toPrecision(4)} (${state.colormap})`;
  };

  const showState = (state: ViewerState): void => {
    element<HTMLSpanElement>('coord').textContent =
      `run ${state.run}/${manifest.runs - 1}, t ${state.timestep}/${manifest.timesteps - 1}, ` +
      `${state.axis}=${state.index}`;
    element<HTMLDivElement>('status').textContent =
      state.status + (state.outOfRange ? ' [out-of-bounds values present]' : '');
    const t = state.telemetry;
    element<HTMLSpanElement>('telemetry').textContent = t
      ? `keep ${t.kept}  load ${t.loaded}  discard ${t.discarded}  ` +
        `${t.bytesRead} B  ${t.millis.toFixed(1)} ms`
      : 'no switches yet';
  };

  const controller = new ViewerController(client, manifest, {
    onFrame: paint,
    onState: showState,
  });

  const picker = element<HTMLSelectElement>('colormap');
  for (const name of colormapNames()) {
    const option = document.createElement('option');
    option.value = name;
    option.textContent = name;
    picker.appendChild(option);
  }
  picker.addEventListener('change', () => {
    void controller.dispatch({ kind: 'set-colormap', name: picker.value });
  });

  const sliceSlider = element<HTMLInputElement>('slice');
  sliceSlider.max = String(axisExtent(manifest.dims, 'z') - 1);
  sliceSlider.value = String(controller.state.index);
  sliceSlider.addEventListener('input', () => {
    void controller.dispatch({
      kind: 'set-slice', axis: controller.state.axis, index: Number(sliceSlider.value),
    });
  });

  window.addEventListener('keydown', (ev) => {
    const map: Record<string, Parameters<ViewerController['dispatch']>[0]> = {
      ArrowRight: { kind: 'navigate', direction: 't+' },
      ArrowLeft: { kind: 'navigate', direction: 't-' },
      ArrowUp: { kind: 'navigate', direction: 'r+' },
      ArrowDown: { kind: 'navigate', direction: 'r-' },
      a: { kind: 'toggle-agreement' },
      A: { kind: 'toggle-agreement' },
    };
    const event = map[ev.key];
    if (event) {
      ev.preventDefault();
      void controller.dispatch(event);
    }
  });

  showState(controller.state);
  await controller.init();
}

start().catch((err) => {
  const status = document.getElementById('status');
  if (status) status.textContent = `failed to start: ${err}`;
});
