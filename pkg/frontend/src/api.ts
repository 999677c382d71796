/** Fetch wrappers for the two endpoints the page consumes. */

import type { AnswerRecord, Health } from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export interface AskResult {
  records: AnswerRecord[];
  /** Server-side explanation for empty or degraded results, verbatim. */
  diagnostic: string | null;
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    if (body.error) return body.error;
  } catch {
    // not a JSON body; fall through to the generic message
  }
  return `HTTP ${response.status}`;
}

/** POST /ask; resolves with the ranked records and the X-Diagnostic header. */
export async function askQuestion(question: string, signal?: AbortSignal): Promise<AskResult> {
  const response = await fetch('/ask', {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ question }),
    signal,
  });
  if (!response.ok) {
    throw new ApiError(response.status, await errorMessage(response));
  }
  const records = (await response.json()) as AnswerRecord[];
  return { records, diagnostic: response.headers.get('X-Diagnostic') };
}

/** GET /health. */
export async function fetchHealth(signal?: AbortSignal): Promise<Health> {
  const response = await fetch('/health', { signal });
  if (!response.ok) {
    throw new ApiError(response.status, await errorMessage(response));
  }
  return (await response.json()) as Health;
}
