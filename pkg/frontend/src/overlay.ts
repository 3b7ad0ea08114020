/**
 * Mask overlay compositing. The pixel math is pure (RGBA byte buffers), so
 * it is testable without a DOM; the canvas glue at the bottom paints the
 * composited buffer onto a real canvas element.
 */
import { decodeRle } from "./rle.js";
import type { MaskEntry, OverlayToggles } from "./types.js";

export const VISIBLE_COLOR: [number, number, number] = [40, 200, 60];
export const AMODAL_COLOR: [number, number, number] = [70, 120, 240];
export const OCCLUDED_COLOR: [number, number, number] = [245, 150, 20];
const ALPHA = 0.45;

export interface MaskLayers {
  visible: Uint8Array;
  amodal: Uint8Array;
}

export function layersFromEntry(entry: MaskEntry): MaskLayers {
  return {
    visible: decodeRle(entry.visible_rle),
    amodal: decodeRle(entry.amodal_rle),
  };
}

/** Pixels in the amodal mask but not the visible mask. */
export function occludedDifference(layers: MaskLayers): Uint8Array {
  const out = new Uint8Array(layers.amodal.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = layers.amodal[i] === 1 && layers.visible[i] === 0 ? 1 : 0;
  }
  return out;
}

function blend(rgba: Uint8ClampedArray, index: number, color: [number, number, number]): void {
  for (let c = 0; c < 3; c++) {
    rgba[index + c] = Math.round((1 - ALPHA) * rgba[index + c] + ALPHA * color[c]);
  }
}

/**
 * Composite the toggled layers over a base RGBA image (length 4*W*H).
 * Layer order: amodal under occluded under visible, so the occluded band
 * stays distinguishable from the visible region. Deterministic; the input
 * buffer is not modified.
 */
export function compositeOverlays(
  base: Uint8ClampedArray,
  width: number,
  height: number,
  targets: MaskLayers[],
  toggles: OverlayToggles,
): Uint8ClampedArray {
  const total = width * height;
  if (base.length !== total * 4) {
    throw new Error(`image buffer is ${base.length} bytes, expected ${total * 4}`);
  }
  for (const layers of targets) {
    if (layers.visible.length !== total || layers.amodal.length !== total) {
      throw new Error("mask size does not match the image size");
    }
  }
  const out = new Uint8ClampedArray(base);
  for (const layers of targets) {
    if (toggles.amodal) {
      for (let i = 0; i < total; i++) {
        if (layers.amodal[i]) blend(out, i * 4, AMODAL_COLOR);
      }
    }
    if (toggles.occluded) {
      const diff = occludedDifference(layers);
      for (let i = 0; i < total; i++) {
        if (diff[i]) blend(out, i * 4, OCCLUDED_COLOR);
      }
    }
    if (toggles.visible) {
      for (let i = 0; i < total; i++) {
        if (layers.visible[i]) blend(out, i * 4, VISIBLE_COLOR);
      }
    }
  }
  return out;
}

/** Which pixels the occluded-difference layer would paint (for tests/UI hints). */
export function paintedOccludedPixels(
  width: number,
  height: number,
  targets: MaskLayers[],
  toggles: OverlayToggles,
): Uint8Array {
  const out = new Uint8Array(width * height);
  if (!toggles.occluded) return out;
  for (const layers of targets) {
    const diff = occludedDifference(layers);
    for (let i = 0; i < out.length; i++) {
      if (diff[i]) out[i] = 1;
    }
  }
  return out;
}

/** Paint an image plus overlays onto a canvas (browser only). */
export function renderToCanvas(
  canvas: HTMLCanvasElement,
  image: HTMLImageElement,
  targets: MaskLayers[],
  toggles: OverlayToggles,
  scale = 4,
): void {
  const w = image.naturalWidth;
  const h = image.naturalHeight;
  const work = document.createElement("canvas");
  work.width = w;
  work.height = h;
  const wctx = work.getContext("2d");
  if (!wctx) return;
  wctx.drawImage(image, 0, 0);
  const data = wctx.getImageData(0, 0, w, h);
  const composited = compositeOverlays(
    data.data, w, h, targets, toggles,
  );
  const out = wctx.createImageData(w, h);
  out.data.set(composited);
  wctx.putImageData(out, 0, 0);
  canvas.width = w * scale;
  canvas.height = h * scale;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(work, 0, 0, canvas.width, canvas.height);
}
