import type { CropRect } from "./types.js";

export const MIN_CROP_SIDE = 32;

/** Centered maximal square, mirroring the server's default crop. */
export function defaultCrop(imageWidth: number, imageHeight: number): CropRect {
  const side = Math.min(imageWidth, imageHeight);
  return {
    x: Math.floor((imageWidth - side) / 2),
    y: Math.floor((imageHeight - side) / 2),
    side,
  };
}

export function isWithinBounds(rect: CropRect, imageWidth: number, imageHeight: number): boolean {
  return (
    rect.x >= 0 &&
    rect.y >= 0 &&
    rect.side > 0 &&
    rect.x + rect.side <= imageWidth &&
    rect.y + rect.side <= imageHeight
  );
}

/** Clamp any proposed rect into a valid square inside the image. */
export function clampCrop(rect: CropRect, imageWidth: number, imageHeight: number): CropRect {
  const maxSide = Math.min(imageWidth, imageHeight);
  const side = Math.round(Math.min(Math.max(rect.side, Math.min(MIN_CROP_SIDE, maxSide)), maxSide));
  const x = Math.round(Math.min(Math.max(rect.x, 0), imageWidth - side));
  const y = Math.round(Math.min(Math.max(rect.y, 0), imageHeight - side));
  return { x, y, side };
}

/** Drag handler: move by (dx, dy), staying inside the image. */
export function moveCrop(
  rect: CropRect,
  dx: number,
  dy: number,
  imageWidth: number,
  imageHeight: number,
): CropRect {
  return clampCrop({ x: rect.x + dx, y: rect.y + dy, side: rect.side }, imageWidth, imageHeight);
}

/** Resize handler: grow/shrink around the top-left corner, clamped. */
export function resizeCrop(
  rect: CropRect,
  delta: number,
  imageWidth: number,
  imageHeight: number,
): CropRect {
  return clampCrop({ x: rect.x, y: rect.y, side: rect.side + delta }, imageWidth, imageHeight);
}
