export { ApiClient, ApiRequestError, ConflictError } from "./api.js";
export { ReaderApp, mount } from "./app.js";
export { computePaperDrop, computeThreadDrop } from "./dnd.js";
export {
  dragToRect,
  identityTransform,
  roundTripError,
  toDocumentSpace,
  toViewportSpace,
  transformToWire,
} from "./geometry.js";
export { renderDrawer, renderedThreadOrder } from "./render/drawer.js";
export { renderOverview, renderedRecommendationOrder } from "./render/overview.js";
export { renderTank, renderedTankSelection } from "./render/tank.js";
export { WorkspaceSession, emptyViewState } from "./state.js";
export * from "./types.js";
