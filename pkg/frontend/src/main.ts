// DOM wiring: render the controller's view and forward clicks/keys.
// Layout lives in index.html; this file only fills the placeholders.

import { ApiClient } from "./api.js";
import { FeedbackController, View } from "./controller.js";

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (node === null) throw new Error(`missing element #${id}`);
    return node as T;
}

const baseUrlInput = el<HTMLInputElement>("base-url");
const queryInput = el<HTMLTextAreaElement>("query-text");
const runButton = el<HTMLButtonElement>("run-query");
const errorBanner = el<HTMLDivElement>("error-banner");
const probeSection = el<HTMLElement>("probe-section");
const probeImage = el<HTMLImageElement>("probe-image");
const progressLabel = el<HTMLDivElement>("progress");
const yesButton = el<HTMLButtonElement>("answer-yes");
const noButton = el<HTMLButtonElement>("answer-no");
const resultsSection = el<HTMLElement>("results-section");
const resultsGrid = el<HTMLDivElement>("results-grid");
const resultsTable = el<HTMLTableElement>("results-table");
const statusLabel = el<HTMLDivElement>("status");

const params = new URLSearchParams(window.location.search);
baseUrlInput.value = params.get("api") ?? "http://127.0.0.1:8040";

let api = new ApiClient(baseUrlInput.value);
let controller = new FeedbackController(api);

function renderTable(columns: string[], rows: unknown[][]): void {
    resultsTable.innerHTML = "";
    const head = resultsTable.createTHead().insertRow();
    for (const column of columns) {
        const cell = document.createElement("th");
        cell.textContent = column;
        head.appendChild(cell);
    }
    const body = resultsTable.createTBody();
    for (const row of rows) {
        const tr = body.insertRow();
        for (const value of row) {
            tr.insertCell().textContent = String(value);
        }
    }
}

function renderGallery(imageIds: number[], scores?: number[]): void {
    resultsGrid.innerHTML = "";
    imageIds.forEach((imageId, position) => {
        const card = document.createElement("figure");
        const image = document.createElement("img");
        image.src = api.imageUrl(imageId);
        image.alt = `image ${imageId}`;
        const caption = document.createElement("figcaption");
        caption.textContent =
            scores !== undefined
                ? `#${imageId} (${scores[position].toFixed(4)})`
                : `#${imageId}`;
        card.appendChild(image);
        card.appendChild(caption);
        resultsGrid.appendChild(card);
    });
}

function render(view: View): void {
    runButton.disabled = view.busy;
    yesButton.disabled = view.busy || view.phase !== "answering";
    noButton.disabled = view.busy || view.phase !== "answering";

    errorBanner.hidden = view.error === null;
    if (view.error !== null) {
        errorBanner.textContent = `${view.error.code}: ${view.error.message}`;
        if (view.error.code === "session_not_found" || view.error.code === "session_done") {
            errorBanner.textContent += " (reload the page to start over)";
        }
    }

    probeSection.hidden = view.phase !== "answering";
    if (view.phase === "answering" && view.probe !== null) {
        probeImage.src = api.imageUrl(view.probe.image_url);
        const budget = view.questionBudget !== null ? ` of <= ${view.questionBudget}` : "";
        progressLabel.textContent =
            `question ${view.probe.questions_asked + 1}${budget}` +
            ` | remaining ${view.probe.remaining}` +
            ` | accepted ${view.probe.accepted_so_far}`;
    }

    resultsSection.hidden = view.phase !== "done";
    if (view.phase === "done") {
        resultsTable.hidden = true;
        resultsGrid.hidden = true;
        if (view.relation !== null) {
            resultsTable.hidden = false;
            renderTable(view.relation.columns, view.relation.rows);
            statusLabel.textContent = `${view.relation.rows.length} rows`;
        } else if (view.topk !== null) {
            resultsGrid.hidden = false;
            renderGallery(
                view.topk.items.map((item) => item.image_id),
                view.topk.items.map((item) => item.score),
            );
            statusLabel.textContent = `top ${view.topk.items.length} by similarity`;
        } else if (view.results !== null) {
            resultsGrid.hidden = false;
            renderGallery(view.results.image_ids, view.results.scores);
            statusLabel.textContent = `${view.results.image_ids.length} accepted images`;
        }
    } else if (view.phase === "querying") {
        statusLabel.textContent = "running query...";
    } else if (view.phase === "answering") {
        statusLabel.textContent = view.sessionId !== null ? `session ${view.sessionId}` : "";
    } else {
        statusLabel.textContent = "";
    }

    if (view.sessionId !== null) {
        window.location.hash = `s=${view.sessionId}`;
    }
}

function attach(): void {
    controller.onChange(render);

    baseUrlInput.addEventListener("change", () => {
        api = new ApiClient(baseUrlInput.value);
        controller = new FeedbackController(api);
        controller.onChange(render);
    });

    runButton.addEventListener("click", () => {
        void controller.submitQuery(queryInput.value);
    });
    yesButton.addEventListener("click", () => void controller.answer(true));
    noButton.addEventListener("click", () => void controller.answer(false));

    document.addEventListener("keydown", (event) => {
        if (event.target === queryInput || event.target === baseUrlInput) return;
        if (event.key === "y" || event.key === "Y") void controller.answer(true);
        if (event.key === "n" || event.key === "N") void controller.answer(false);
    });

    const hash = new URLSearchParams(window.location.hash.replace(/^#/, ""));
    const resumeId = hash.get("s");
    if (resumeId !== null && resumeId !== "") {
        void controller.resume(resumeId);
    }
}

attach();
