export * from "./api.js";
export * from "./state.js";
export * from "./viewport.js";
export * from "./timeline.js";
export * from "./rmsePlot.js";
export * from "./app.js";
