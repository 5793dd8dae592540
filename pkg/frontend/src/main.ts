/** Page entry point: mount the login app against the same-origin service. */

import { AuthApi } from "./api";
import { LoginApp } from "./app";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
new LoginApp(root, { api: new AuthApi() }).start();
