export * from "./types.js";
export * from "./state.js";
export * from "./store.js";
export * from "./geo.js";
export * from "./palette.js";
export * from "./api.js";
export * from "./snapshot.js";
