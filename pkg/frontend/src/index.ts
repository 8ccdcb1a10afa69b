/** @file Public surface of the bindings package. */

export { FormatError, EngineError, GeometryError } from "./errors.js";
export {
  MAX_RANK,
  TENSOR_MAGIC,
  TENSOR_VERSION,
  decodeTensor,
  encodeTensor,
  readTensor,
  scalar,
  scalarValue,
  tensor,
  writeTensor,
} from "./tensor.js";
export type { Tensor } from "./tensor.js";
export {
  FIELD_MAGIC,
  FIELD_VERSION,
  decodeField,
  encodeField,
  field,
  identityField,
  readField,
  writeField,
} from "./field.js";
export type { Field } from "./field.js";
export {
  LANDMARK_FORMAT_VERSION,
  decodeLandmarks,
  encodeLandmarks,
  readLandmarks,
  validateLandmarks,
  writeLandmarks,
} from "./landmarks.js";
export type { LandmarkGroup, LandmarkSet } from "./landmarks.js";
export { engineCommand, engineVersion, runKernelOp, runManifest } from "./runner.js";
export type { KernelResult, ManifestTask, ParamValue } from "./runner.js";
export {
  bendingEnergy,
  buildWarp,
  cycleLoss,
  embeddingCosineDistance,
  evalTps,
  featureMatchingLoss,
  ganLossDiscriminator,
  ganLossGenerator,
  gridSample,
  gridSampleBackward,
  multiscaleFields,
  solveTps,
  spatialCorrelativeLoss,
  spatialCorrelativeMaps,
  totalLoss,
} from "./api.js";
export type {
  BorderMode,
  CorrelativeOptions,
  MultiscaleOptions,
  SampleGradients,
  TotalLossWeights,
  TpsSolution,
  WarpOptions,
} from "./api.js";

/** Mirrors the engine's library version. */
export const VERSION = "0.1.0";
