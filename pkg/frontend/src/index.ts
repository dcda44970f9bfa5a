export * from "./ot";
export * from "./replica";
export * from "./view";
export * from "./media";
export * from "./client";
