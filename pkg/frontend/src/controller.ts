// Event wiring between the DOM and the session service. Every user action is
// fire-and-await: send, adopt the server's returned state, re-render. The UI
// invents no local protocol state and never measures time; conflicting local
// edits are simply overwritten by the next server view.

import { ApiClient, ApiError, NetworkError, SessionState } from "./api"
import { mountSkeleton, renderTrial, showNotice, showRetryOverlay, toTrialView } from "./view"

const CORNER_KEYS = new Set(["TL", "TR", "BL", "BR"])

function sleep(ms: number): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, ms))
}

export class SessionController {
    state: SessionState | null = null
    private chartVisible = false

    constructor(
        private api: ApiClient,
        private root: HTMLElement,
        private retryDelayMs: number = 1000,
        private maxRetries: number = Number.POSITIVE_INFINITY,
    ) {}

    async boot(doc: Document): Promise<void> {
        mountSkeleton(this.root)
        this.bind(doc)
        await this.resync()
    }

    private bind(doc: Document): void {
        doc.addEventListener("keydown", (event) => {
            void this.onKey(event as KeyboardEvent)
        })
        this.root.addEventListener("click", (event) => {
            const target = event.target as HTMLElement
            if (target.id === "continue-button") void this.act(() => this.api.advance())
            else if (target.id === "chart-toggle") this.toggleChart()
            else if (target.dataset && target.dataset.corner)
                void this.tapCorner(target.dataset.corner)
        })
    }

    // -- user intents

    async onKey(event: KeyboardEvent): Promise<void> {
        const s = this.state
        if (!s || s.completed) return
        const key = event.key
        if (s.on_break) {
            if (key === "Enter") await this.act(() => this.api.advance())
            return
        }
        if (key === " ") {
            event.preventDefault()
            if (s.phase !== "learning") await this.act(() => this.api.play())
            return
        }
        if (key === "Enter") {
            await this.act(() => this.api.confirm())
            return
        }
        if (key === "Backspace") {
            event.preventDefault()
            await this.act(() => this.api.backspace())
            return
        }
        if (s.answer_mode === "label" && /^[a-z0-9]$/.test(key)) {
            // ignore keys until played; the server enforces this too
            if (!s.played || s.playing) return
            if (!s.labels.includes(key)) return
            await this.act(() => this.api.answer([key]))
        }
    }

    async tapCorner(corner: string): Promise<void> {
        const s = this.state
        if (!s || s.completed || s.on_break || !CORNER_KEYS.has(corner)) return
        if (s.phase !== "learning" && (!s.played || s.playing)) return
        await this.act(() => this.api.answer([corner]))
    }

    toggleChart(): void {
        const overlay = this.root.querySelector<HTMLElement>("#chart-overlay")
        if (!overlay || !this.state || !this.state.chart_allowed) return
        this.chartVisible = !this.chartVisible
        overlay.hidden = !this.chartVisible
        overlay.textContent = this.state.labels.join("  ")
    }

    // -- server round trips

    private async act(call: () => Promise<SessionState>): Promise<void> {
        try {
            this.state = await call()
            showNotice(this.root, null)
        } catch (err) {
            if (err instanceof ApiError) {
                // protocol rejection: show why, then adopt the server's state
                showNotice(this.root, err.message)
                await this.resync()
                return
            }
            if (err instanceof NetworkError) {
                await this.recover()
                return
            }
            throw err
        }
        this.render()
    }

    async resync(): Promise<void> {
        try {
            this.state = await this.api.getState()
        } catch (err) {
            if (err instanceof NetworkError) {
                await this.recover()
                return
            }
            throw err
        }
        this.render()
    }

    /** Blocking retry overlay: poll state until the service is reachable. */
    private async recover(): Promise<void> {
        showRetryOverlay(this.root, true)
        for (let attempt = 0; attempt < this.maxRetries; attempt++) {
            await sleep(this.retryDelayMs)
            try {
                this.state = await this.api.getState()
                showRetryOverlay(this.root, false)
                this.render()
                return
            } catch (err) {
                if (!(err instanceof NetworkError)) throw err
            }
        }
        showRetryOverlay(this.root, true)
    }

    render(): void {
        if (this.state) renderTrial(toTrialView(this.state), this.root)
    }
}
