// View state machine for the feedback loop. The controller never decides
// ordering or thresholds itself: every transition is the result of exactly
// one API call, and only one request may be in flight at a time.

import {
    ApiClient,
    ApiError,
    Probe,
    QueryResponse,
    RelationResult,
    SessionResults,
    TopkResult,
    isDone,
} from "./api.js";

export type Phase = "idle" | "querying" | "answering" | "done" | "error";

export interface View {
    phase: Phase;
    busy: boolean;
    sessionId: string | null;
    candidateCount: number;
    questionBudget: number | null;
    probe: Probe | null;
    relation: RelationResult | null;
    topk: TopkResult | null;
    results: SessionResults | null;
    missingIds: number[];
    error: { code: string; message: string } | null;
}

function initialView(): View {
    return {
        phase: "idle",
        busy: false,
        sessionId: null,
        candidateCount: 0,
        questionBudget: null,
        probe: null,
        relation: null,
        topk: null,
        results: null,
        missingIds: [],
        error: null,
    };
}

export function questionBudget(candidateCount: number): number {
    return Math.floor(Math.log2(candidateCount)) + 1;
}

export class FeedbackController {
    private view: View = initialView();
    private listeners: Array<(view: View) => void> = [];

    constructor(private readonly api: ApiClient) {}

    onChange(listener: (view: View) => void): void {
        this.listeners.push(listener);
    }

    current(): View {
        return this.view;
    }

    private update(patch: Partial<View>): void {
        this.view = { ...this.view, ...patch };
        for (const listener of this.listeners) listener(this.view);
    }

    private failed(error: unknown): void {
        if (error instanceof ApiError) {
            this.update({
                phase: "error",
                busy: false,
                error: { code: error.code, message: error.message },
            });
        } else {
            this.update({
                phase: "error",
                busy: false,
                error: { code: "network", message: String(error) },
            });
        }
    }

    /** Submit a query. Returns false if a request is already in flight. */
    async submitQuery(ssql: string): Promise<boolean> {
        if (this.view.busy) return false;
        this.update({ ...initialView(), phase: "querying", busy: true });
        let outcome: QueryResponse;
        try {
            outcome = await this.api.query(ssql);
        } catch (error) {
            this.failed(error);
            return true;
        }
        if (outcome.kind === "relation") {
            this.update({ phase: "done", busy: false, relation: outcome });
            return true;
        }
        if (outcome.kind === "topk") {
            this.update({
                phase: "done",
                busy: false,
                topk: outcome,
                missingIds: outcome.missing_ids,
            });
            return true;
        }
        this.update({
            sessionId: outcome.session_id,
            candidateCount: outcome.candidate_count,
            questionBudget: questionBudget(outcome.candidate_count),
            missingIds: outcome.missing_ids,
        });
        await this.refreshProbe();
        return true;
    }

    /** Resume a session by id (e.g. after a page reload). */
    async resume(sessionId: string): Promise<void> {
        this.update({ ...initialView(), phase: "querying", busy: true, sessionId });
        await this.refreshProbe();
    }

    private async refreshProbe(): Promise<void> {
        const sessionId = this.view.sessionId;
        if (sessionId === null) return;
        try {
            const probe = await this.api.nextProbe(sessionId);
            if (isDone(probe)) {
                await this.loadResults();
            } else {
                this.update({ phase: "answering", busy: false, probe });
            }
        } catch (error) {
            this.failed(error);
        }
    }

    private async loadResults(): Promise<void> {
        const sessionId = this.view.sessionId;
        if (sessionId === null) return;
        try {
            const results = await this.api.results(sessionId);
            this.update({ phase: "done", busy: false, probe: null, results });
        } catch (error) {
            this.failed(error);
        }
    }

    /** Answer the pending probe. Returns false when ignored (not answering,
     * or another request is still in flight), so a double click cannot post
     * twice. */
    async answer(relevant: boolean): Promise<boolean> {
        if (this.view.phase !== "answering" || this.view.busy) return false;
        const sessionId = this.view.sessionId;
        if (sessionId === null) return false;
        this.update({ busy: true });
        try {
            const step = await this.api.answer(sessionId, relevant);
            if (isDone(step)) {
                await this.loadResults();
            } else {
                this.update({ phase: "answering", busy: false, probe: step });
            }
        } catch (error) {
            this.failed(error);
        }
        return true;
    }
}
