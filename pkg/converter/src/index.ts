export { convert, type ConvertResult } from "./medmnist.js";
export { convertAmd, type AmdResult } from "./amd.js";
export { parseNpy, itemSize, type NpyArray } from "./npy.js";
export { parseNpz, readNpz } from "./npz.js";
export { parsePpm, type PpmImage } from "./ppm.js";
export { downsampleRgb } from "./resample.js";
export { writeDatasetDir, type DatasetSplit } from "./dataset.js";
