import { buildUi } from "./screens.js";
import { UiSession } from "./session.js";
import { WebSocketLineTransport } from "./transport.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const session = new UiSession((url) => new WebSocketLineTransport(new WebSocket(url)));
buildUi(root, session);
