// @vitest-environment jsdom
//
// Scripted end-to-end run against the real session service: spawns
// `tactokit serve` with a 10-trial digit-study config, drives the UI through
// real keyboard events, and checks the server log afterwards.

import { afterAll, beforeAll, describe, expect, it } from "vitest"
import { spawn, ChildProcess } from "node:child_process"
import { createServer } from "node:net"
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs"
import { tmpdir } from "node:os"
import { join } from "node:path"

import { ApiClient, ApiError, SessionState } from "../src/api"
import { SessionController } from "../src/controller"

function freePort(): Promise<number> {
    return new Promise((resolve, reject) => {
        const server = createServer()
        server.listen(0, "127.0.0.1", () => {
            const address = server.address()
            if (address && typeof address === "object") {
                const port = address.port
                server.close(() => resolve(port))
            } else {
                reject(new Error("no port"))
            }
        })
    })
}

function sleep(ms: number): Promise<void> {
    return new Promise((r) => setTimeout(r, ms))
}

let child: ChildProcess
let api: ApiClient
let logPath: string
let base: string

async function waitForServer(timeoutMs = 20000): Promise<void> {
    const deadline = Date.now() + timeoutMs
    while (Date.now() < deadline) {
        try {
            const r = await fetch(`${base}/session/state`)
            if (r.status === 200) return
        } catch {
            // not up yet
        }
        await sleep(100)
    }
    throw new Error("service did not come up")
}

beforeAll(async () => {
    const port = await freePort()
    base = `http://127.0.0.1:${port}`
    const dir = mkdtempSync(join(tmpdir(), "tactokit-ui-"))
    logPath = join(dir, "session.jsonl")
    const config = [
        "[server]",
        `port = ${port}`,
        `log = '${logPath}'`,
        "sink = 'instant'",
        "",
        "[session]",
        "study = 'study2_digit'",
        "participant = 'ui-e2e'",
        "method = '2-hetero'",
        "posture = 'Forward'",
        "reference_frame = 'RF1'",
        "phase_plan = [['testing', 10]]",
        "burst_s = 0.01",
        "isi_s = 0.0",
    ].join("\n")
    const configPath = join(dir, "serve.toml")
    writeFileSync(configPath, config)
    child = spawn("python3", ["-m", "tactokit.cli", "serve", "--config", configPath], {
        stdio: "ignore",
    })
    api = new ApiClient(base)
    await waitForServer()
}, 30000)

afterAll(() => {
    child?.kill("SIGTERM")
})

function pressKey(k: string): void {
    document.dispatchEvent(new KeyboardEvent("keydown", { key: k }))
}

async function waitFor(
    controller: SessionController,
    predicate: (s: SessionState) => boolean,
    timeoutMs = 5000,
): Promise<SessionState> {
    const deadline = Date.now() + timeoutMs
    while (Date.now() < deadline) {
        await controller.resync()
        const s = controller.state
        if (s && predicate(s)) return s
        await sleep(20)
    }
    throw new Error("condition never became true")
}

describe("scripted 10-trial study2-digit session", () => {
    it("runs end to end with the protocol enforced by the server", async () => {
        document.body.innerHTML = '<div id="app"></div>'
        let root = document.getElementById("app") as HTMLElement
        let controller = new SessionController(api, root, 50, 5)
        await controller.boot(document)

        let state = controller.state as SessionState
        expect(state.phase).toBe("testing")
        expect(state.trial_index).toBe(1)
        expect(state.played).toBe(false)

        // answer before play is impossible: the UI ignores the key and the
        // server rejects a direct attempt with 409
        pressKey("3")
        await sleep(50)
        await controller.resync()
        expect((controller.state as SessionState).answer_buffer).toEqual([])
        await expect(api.answer(["3"])).rejects.toThrowError(ApiError)
        await expect(api.answer(["3"])).rejects.toMatchObject({ status: 409 })

        const typed: string[] = []
        const seenTrialIndices: number[] = []
        for (let trial = 1; trial <= 10; trial++) {
            state = await waitFor(controller, (s) => s.completed || !s.on_break)
            expect(state.on_break).toBe(false)  // 10 trials, no break expected
            expect(state.phase).toBe("testing")
            seenTrialIndices.push(state.trial_index)

            pressKey(" ")
            state = await waitFor(controller, (s) => s.played && !s.playing)

            if (trial === 5) {
                // mid-trial refresh: type a digit, tear the page down, reboot
                // from server state, and check nothing was lost
                const before = controller.state as SessionState
                await controller.onKey(new KeyboardEvent("keydown", { key: "9" }))
                document.body.innerHTML = '<div id="app"></div>'
                root = document.getElementById("app") as HTMLElement
                controller = new SessionController(api, root, 50, 5)
                await controller.boot(document)
                const restored = controller.state as SessionState
                expect(restored.trial_index).toBe(before.trial_index)
                expect(restored.played).toBe(true)
                expect(restored.answer_buffer).toEqual(["9"])
                expect(restored.records_count).toBe(before.records_count)
                // replace the pre-refresh digit to keep the script uniform
                await controller.onKey(new KeyboardEvent("keydown", { key: "Backspace" }))
            }

            const digit = String(trial % 10)
            typed.push(digit)
            await controller.onKey(new KeyboardEvent("keydown", { key: digit }))
            expect((controller.state as SessionState).answer_buffer).toEqual([digit])

            await controller.onKey(new KeyboardEvent("keydown", { key: "Enter" }))
            state = controller.state as SessionState
            expect(state.records_count).toBe(trial)
            // study 2 testing shows feedback after each confirmation
            expect(state.feedback).not.toBeNull()
        }

        expect(seenTrialIndices).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
        state = await waitFor(controller, (s) => s.completed)
        expect(state.records_count).toBe(10)
        expect(
            document.querySelector<HTMLElement>("#complete-overlay")?.hidden,
        ).toBe(false)

        // the server log carries exactly the scripted session
        const lines = readFileSync(logPath, "utf-8").trim().split("\n")
        expect(lines.length).toBe(10)
        const records = lines.map((line) => JSON.parse(line))
        expect(records.map((r) => r.response)).toEqual(typed)
        for (const record of records) {
            expect(record.phase).toBe("testing")
            expect(record.participant).toBe("ui-e2e")
            expect(record.rt_s).toBeGreaterThanOrEqual(0)
            expect(record.method).toBe("2-hetero")
        }
    }, 60000)
})
