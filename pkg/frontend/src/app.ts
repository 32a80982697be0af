import { mountApp } from "./render.js";
import { HttpTransport } from "./transport.js";

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root !== null) {
    mountApp(root, new HttpTransport());
  }
});
