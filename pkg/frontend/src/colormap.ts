/**
 * Scalar-to-color mapping and slice rasterization.
 *
 * Values map linearly from [0, valuePeak] into the colormap; out-of-range
 * values are clamped and reported so the UI can flag lossy reconstructions
 * that strayed outside the original bounds.
 */

export type Rgb = [number, number, number];

// Anchor points sampled from the usual perceptually uniform maps; lookup
// interpolates linearly between them.
const ANCHORS: Record<string, Rgb[]> = {
  viridis: [
    [68, 1, 84], [71, 44, 122], [59, 81, 139], [44, 113, 142], [33, 144, 141],
    [39, 173, 129], [92, 200, 99], [170, 220, 50], [253, 231, 37],
  ],
  magma: [
    [0, 0, 4], [28, 16, 68], [79, 18, 123], [129, 37, 129], [181, 54, 122],
    [229, 80, 100], [251, 135, 97], [254, 194, 135], [252, 253, 191],
  ],
  gray: [
    [0, 0, 0], [255, 255, 255],
  ],
};

export function colormapNames(): string[] {
  return Object.keys(ANCHORS);
}

export function sampleColormap(name: string, t: number): Rgb {
  const anchors = ANCHORS[name] ?? ANCHORS.viridis;
  const clamped = Math.max(0, Math.min(1, t));
  const pos = clamped * (anchors.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.min(lo + 1, anchors.length - 1);
  const frac = pos - lo;
  return [
    Math.round(anchors[lo][0] + frac * (anchors[hi][0] - anchors[lo][0])),
    Math.round(anchors[lo][1] + frac * (anchors[hi][1] - anchors[lo][1])),
    Math.round(anchors[lo][2] + frac * (anchors[hi][2] - anchors[lo][2])),
  ];
}

export interface RenderedSlice {
  pixels: Uint8ClampedArray; // RGBA, row-major, height rows of width
  width: number;
  height: number;
  outOfRange: boolean;
}

export function renderSlice(
  data: Float32Array,
  width: number,
  height: number,
  valuePeak: number,
  colormap: string,
): RenderedSlice {
  if (data.length !== width * height) {
    throw new Error(`slice has ${data.length} values, expected ${width}x${height}`);
  }
  const pixels = new Uint8ClampedArray(width * height * 4);
  let outOfRange = false;
  for (let i = 0; i < data.length; i++) {
    const v = data[i];
    if (v < 0 || v > valuePeak) outOfRange = true;
    const [r, g, b] = sampleColormap(colormap, valuePeak > 0 ? v / valuePeak : 0);
    pixels[4 * i] = r;
    pixels[4 * i + 1] = g;
    pixels[4 * i + 2] = b;
    pixels[4 * i + 3] = 255;
  }
  return { pixels, width, height, outOfRange };
}

/** Agreement fractions in [0, 1] as a red-to-green heatmap. */
export function renderAgreementPlane(
  values: Float32Array,
  width: number,
  height: number,
): RenderedSlice {
  if (values.length !== width * height) {
    throw new Error(`agreement plane has ${values.length} values, expected ${width}x${height}`);
  }
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < values.length; i++) {
    const t = Math.max(0, Math.min(1, values[i]));
    pixels[4 * i] = Math.round(220 * (1 - t) + 20 * t);
    pixels[4 * i + 1] = Math.round(40 * (1 - t) + 180 * t);
    pixels[4 * i + 2] = 50;
    pixels[4 * i + 3] = 255;
  }
  return { pixels, width, height, outOfRange: false };
}
