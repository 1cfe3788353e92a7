// Pure view layer: derive a TrialView from the server state and project it
// onto a fixed DOM skeleton. No timing, no local protocol state.

import { SessionState } from "./api"

export interface TrialView {
    phase: string
    trialIndex: number
    trialsTotal: number
    played: boolean
    playing: boolean
    canReplay: boolean
    answerBuffer: string[]
    cornersMode: boolean
    canAnswer: boolean
    canConfirm: boolean
    feedback: { label: string; correct: boolean } | null
    onBreak: boolean
    breakKind: string | null
    completed: boolean
    prompt: string | null
    labels: string[]
    chartAllowed: boolean
    recordsCount: number
    progress: number
}

export function toTrialView(s: SessionState): TrialView {
    const cornersMode = s.answer_mode === "corners"
    const learning = s.phase === "learning"
    const inTrial = !s.on_break && !s.completed
    const canAnswer = inTrial && (learning || (s.played && !s.playing))
    const bufferFull = cornersMode ? s.answer_buffer.length === 3 : s.answer_buffer.length === 1
    return {
        phase: s.phase,
        trialIndex: s.trial_index,
        trialsTotal: s.trials_in_phase,
        played: s.played,
        playing: s.playing,
        canReplay: s.can_replay,
        answerBuffer: s.answer_buffer,
        cornersMode,
        canAnswer,
        canConfirm: canAnswer && (learning ? s.answer_buffer.length > 0 : bufferFull),
        feedback: s.feedback
            ? { label: s.feedback.correct_label, correct: s.feedback.was_correct }
            : null,
        onBreak: s.on_break,
        breakKind: s.break_kind,
        completed: s.completed,
        prompt: s.prompt,
        labels: s.labels,
        chartAllowed: s.chart_allowed,
        recordsCount: s.records_count,
        progress: s.trials_in_phase > 0 ? Math.min(s.trial_index / s.trials_in_phase, 1) : 0,
    }
}

const CORNERS = ["TL", "TR", "BL", "BR"]

export function mountSkeleton(root: HTMLElement): void {
    root.innerHTML = `
      <div id="session-screen">
        <div id="header">
          <span id="phase-label"></span>
          <span id="trial-counter"></span>
        </div>
        <div id="progress-track"><div id="progress-bar"></div></div>
        <div id="prompt-banner" hidden></div>
        <div id="play-status"></div>
        <div id="answer-area">
          <div id="answer-buffer"></div>
          <div id="corner-grid" hidden>
            ${CORNERS.map((c) => `<button class="corner" data-corner="${c}">${c}</button>`).join("")}
          </div>
        </div>
        <div id="feedback-banner" hidden></div>
        <div id="notice" hidden></div>
        <div id="help-line">space = play &nbsp; enter = confirm &nbsp; backspace = edit</div>
        <button id="chart-toggle" hidden>pattern chart</button>
        <div id="chart-overlay" hidden></div>
      </div>
      <div id="break-overlay" class="overlay" hidden>
        <div class="overlay-box">
          <p id="break-text"></p>
          <button id="continue-button">continue</button>
        </div>
      </div>
      <div id="complete-overlay" class="overlay" hidden>
        <div class="overlay-box"><p id="complete-text"></p></div>
      </div>
      <div id="retry-overlay" class="overlay" hidden>
        <div class="overlay-box"><p>connection lost, retrying…</p></div>
      </div>`
}

function el<T extends HTMLElement>(root: HTMLElement, id: string): T {
    const node = root.querySelector<T>(`#${id}`)
    if (!node) throw new Error(`missing skeleton node #${id}`)
    return node
}

export function renderTrial(view: TrialView, root: HTMLElement): void {
    el(root, "phase-label").textContent = view.phase
    el(root, "trial-counter").textContent =
        view.phase === "learning"
            ? "practice"
            : `trial ${view.trialIndex} / ${view.trialsTotal}`
    el<HTMLDivElement>(root, "progress-bar").style.width = `${Math.round(view.progress * 100)}%`

    const prompt = el(root, "prompt-banner")
    prompt.hidden = view.prompt === null
    prompt.textContent = view.prompt === null ? "" : `draw: ${view.prompt}`

    const status = el(root, "play-status")
    if (view.completed || view.onBreak) {
        status.textContent = ""
    } else if (view.phase === "learning") {
        status.textContent = "click the corners for the prompted pattern"
    } else if (view.playing) {
        status.textContent = "playing…"
    } else if (!view.played) {
        status.textContent = "press space to play the pattern"
    } else {
        status.textContent = view.canReplay
            ? "answer, or press space to replay"
            : "enter your answer"
    }

    const buffer = el(root, "answer-buffer")
    buffer.textContent = view.answerBuffer.length
        ? view.answerBuffer.join(" ")
        : "·"

    const grid = el<HTMLDivElement>(root, "corner-grid")
    grid.hidden = !(view.cornersMode || view.phase === "learning")
    for (const button of Array.from(grid.querySelectorAll<HTMLButtonElement>("button.corner"))) {
        button.disabled = !view.canAnswer
    }

    const feedback = el(root, "feedback-banner")
    feedback.hidden = view.feedback === null
    if (view.feedback) {
        feedback.textContent = view.feedback.correct
            ? `correct: ${view.feedback.label}`
            : `answer was: ${view.feedback.label}`
        feedback.className = view.feedback.correct ? "good" : "bad"
    }

    el<HTMLButtonElement>(root, "chart-toggle").hidden = !view.chartAllowed
    if (!view.chartAllowed) el(root, "chart-overlay").hidden = true

    const breakOverlay = el(root, "break-overlay")
    breakOverlay.hidden = !view.onBreak
    el(root, "break-text").textContent =
        view.breakKind === "phase"
            ? "phase complete — rest, then continue"
            : "short break — rest your wrist"

    const complete = el(root, "complete-overlay")
    complete.hidden = !view.completed
    el(root, "complete-text").textContent = view.completed
        ? `session complete — ${view.recordsCount} answers recorded, thank you`
        : ""
}

export function showNotice(root: HTMLElement, text: string | null): void {
    const notice = el(root, "notice")
    notice.hidden = !text
    notice.textContent = text ?? ""
}

export function showRetryOverlay(root: HTMLElement, visible: boolean): void {
    el(root, "retry-overlay").hidden = !visible
}
