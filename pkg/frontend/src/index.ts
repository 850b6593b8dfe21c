export { parseCsv, columnIndex, numericColumn } from "./csv.js";
export {
  loadFinalSamples,
  loadManifest,
  loadPocSummary,
  loadRun,
  loadTrace,
  seedBands,
} from "./runs.js";
export { plotHist2d, renderHist2d } from "./hist2d.js";
export { plotMmdCurves, renderMmdCurves } from "./mmdCurve.js";
export { plotPocSlope, renderPocSlope } from "./pocSlope.js";
export { LinearScale, SvgScene, makeFrame } from "./svg.js";
