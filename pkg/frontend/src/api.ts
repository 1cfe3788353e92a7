// Typed client for the localhost session service. Every call returns the
// server's full session view; the server is the sole source of truth and the
// view never contains the pending stimulus.

export interface Feedback {
    correct_label: string
    was_correct: boolean
}

export interface SessionState {
    study: string
    participant: string
    method: string
    posture: string
    reference_frame: string
    answer_mode: "label" | "corners"
    phase: "learning" | "training" | "testing"
    phase_index: number
    phase_count: number
    trial_index: number
    trials_in_phase: number
    played: boolean
    playing: boolean
    can_replay: boolean
    answer_buffer: string[]
    on_break: boolean
    break_kind: string | null
    completed: boolean
    feedback: Feedback | null
    prompt: string | null
    labels: string[]
    chart_allowed: boolean
    records_count: number
}

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message)
        this.name = "ApiError"
    }
}

export class NetworkError extends Error {
    constructor(message: string) {
        super(message)
        this.name = "NetworkError"
    }
}

export class ApiClient {
    constructor(private baseUrl: string = "") {}

    private async request(path: string, init?: RequestInit): Promise<SessionState> {
        let response: Response
        try {
            response = await fetch(this.baseUrl + path, init)
        } catch (err) {
            throw new NetworkError(String(err))
        }
        let body: any = {}
        try {
            body = await response.json()
        } catch {
            // non-JSON error bodies fall through to the status check
        }
        if (!response.ok) {
            const message = body.error ?? body.detail ?? `HTTP ${response.status}`
            throw new ApiError(response.status, String(message))
        }
        return body as SessionState
    }

    private post(path: string, payload?: unknown): Promise<SessionState> {
        return this.request(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: payload === undefined ? "{}" : JSON.stringify(payload),
        })
    }

    getState(): Promise<SessionState> {
        return this.request("/session/state")
    }

    startSession(config: Record<string, unknown>): Promise<SessionState> {
        return this.post("/session", config)
    }

    play(): Promise<SessionState> {
        return this.post("/trial/play")
    }

    answer(labels: string[]): Promise<SessionState> {
        return this.post("/trial/answer", { labels })
    }

    backspace(): Promise<SessionState> {
        return this.post("/trial/backspace")
    }

    confirm(): Promise<SessionState> {
        return this.post("/trial/confirm")
    }

    advance(): Promise<SessionState> {
        return this.post("/session/advance")
    }
}
