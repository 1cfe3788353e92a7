import { ApiClient } from "./api"
import { SessionController } from "./controller"

// Same-origin by default (the service can mount this UI statically); a lab
// machine can point elsewhere with ?api=http://127.0.0.1:7341
const params = new URLSearchParams(window.location.search)
const api = new ApiClient(params.get("api") ?? "")
const root = document.getElementById("app")

if (root) {
    const controller = new SessionController(api, root)
    void controller.boot(document)
}
