/** Browser entry point: mounts the console on #root. The API origin
 * defaults to same-origin and can be overridden with ?api=http://... */

import { mountConsole } from "./app";
import { ApiClient } from "./client";

const root = document.getElementById("root");
if (root) {
  const api = new URLSearchParams(window.location.search).get("api") ?? "";
  mountConsole(root, new ApiClient(api));
}
