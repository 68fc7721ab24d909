import { makeApi } from "./api.js";
import { createApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}
createApp(root, makeApi(""));
