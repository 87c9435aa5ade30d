// Browser bootstrap: the console is served by the proxy's control API, so
// the control endpoint is simply the page origin.

import { ConsoleSession } from "./api.js";
import { renderApp } from "./ui.js";

const session = new ConsoleSession(window.location.origin);
renderApp(document.getElementById("app") as HTMLElement, session);
session.connect();
