// Typed client for the query/calibration HTTP API. All state lives on the
// server; this module only shapes requests and decodes responses.

export interface RelationResult {
    kind: "relation";
    columns: string[];
    rows: unknown[][];
}

export interface TopkItem {
    image_id: number;
    score: number;
}

export interface TopkResult {
    kind: "topk";
    items: TopkItem[];
    missing_ids: number[];
}

export interface CalibrationStart {
    kind: "calibration";
    session_id: string;
    candidate_count: number;
    missing_ids: number[];
}

export type QueryResponse = RelationResult | TopkResult | CalibrationStart;

export interface Probe {
    image_id: number;
    image_url: string;
    questions_asked: number;
    remaining: number;
    accepted_so_far: number;
}

export type ProbeResponse = Probe | { done: true };

export interface SessionResults {
    image_ids: number[];
    scores: number[];
}

export function isDone(response: ProbeResponse): response is { done: true } {
    return (response as { done?: boolean }).done === true;
}

export class ApiError extends Error {
    constructor(
        public readonly code: string,
        message: string,
        public readonly status: number,
    ) {
        super(message);
    }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    constructor(
        private readonly baseUrl: string = "",
        private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async decode<T>(response: Response): Promise<T> {
        if (response.ok) {
            return (await response.json()) as T;
        }
        let code = "internal";
        let message = `request failed with status ${response.status}`;
        try {
            const body = await response.json();
            if (typeof body.code === "string") code = body.code;
            if (typeof body.message === "string") message = body.message;
        } catch {
            // non-JSON error body; keep the generic message
        }
        throw new ApiError(code, message, response.status);
    }

    private async get<T>(path: string): Promise<T> {
        const response = await this.fetchFn(this.baseUrl + path);
        return this.decode<T>(response);
    }

    private async post<T>(path: string, body: unknown): Promise<T> {
        const response = await this.fetchFn(this.baseUrl + path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        return this.decode<T>(response);
    }

    query(ssql: string): Promise<QueryResponse> {
        return this.post<QueryResponse>("/v1/query", { ssql });
    }

    nextProbe(sessionId: string): Promise<ProbeResponse> {
        return this.get<ProbeResponse>(`/v1/sessions/${sessionId}/next`);
    }

    answer(sessionId: string, relevant: boolean): Promise<ProbeResponse> {
        return this.post<ProbeResponse>(`/v1/sessions/${sessionId}/answer`, { relevant });
    }

    results(sessionId: string): Promise<SessionResults> {
        return this.get<SessionResults>(`/v1/sessions/${sessionId}/results`);
    }

    imageUrl(pathOrId: string | number): string {
        if (typeof pathOrId === "number") {
            return `${this.baseUrl}/v1/images/${pathOrId}`;
        }
        return this.baseUrl + pathOrId;
    }
}
