export interface Manifest {
  runs: number;
  timesteps: number;
  dims: [number, number, number];
  block_dims: [number, number, number];
  grid_dims: [number, number, number];
  reduction: string;
  value_peak: number;
  b_rem: number;
}

export type Axis = 'x' | 'y' | 'z';

export interface Telemetry {
  kept: number;
  loaded: number;
  discarded: number;
  bytesRead: number;
  millis: number;
}

export interface SlicePayload {
  data: Float32Array;
  width: number;
  height: number;
  telemetry: Telemetry;
}

export interface AgreementPayload {
  values: Float32Array;
  gridDims: [number, number, number];
  min: number;
  mean: number;
}

/** Extent of the slice plane perpendicular to an axis: [width, height]. */
export function sliceShape(dims: [number, number, number], axis: Axis): [number, number] {
  const [x, y, z] = dims;
  if (axis === 'z') return [x, y];
  if (axis === 'y') return [x, z];
  return [y, z];
}

/** Length of the volume along an axis (valid slice indices are below it). */
export function axisExtent(dims: [number, number, number], axis: Axis): number {
  return axis === 'x' ? dims[0] : axis === 'y' ? dims[1] : dims[2];
}
