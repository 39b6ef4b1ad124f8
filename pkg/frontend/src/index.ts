export * from "./types";
export * from "./view";
export * from "./editing";
export * from "./api";
export * from "./canvas";
