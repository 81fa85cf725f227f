/**
 * Browser bootstrap. Configuration comes from query parameters:
 *
 *   ?api=http://127.0.0.1:8000     API base URL (default: same origin)
 *   &session=<session id>          resume an existing session
 *   &polarization=...&bias=...     preselect a condition on the start screen
 */

import { createApp } from "./app.js";

function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const polarization = params.get("polarization");
  const bias = params.get("bias");
  const app = createApp({
    apiBase: params.get("api") ?? window.location.origin,
    sessionId: params.get("session") ?? undefined,
    condition:
      polarization && bias ? { polarization, bias } : undefined,
  });
  const mount = document.getElementById("app");
  if (!mount) throw new Error("missing #app mount point");
  mount.replaceChildren(app.root);
  void app.start();
}

bootstrap();
