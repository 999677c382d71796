/** Wire types; field names and shapes mirror the service payload exactly. */

export interface AnswerRecord {
  answer_text: string;
  bindings: Record<string, string>;
  confidence: number;
  passage_id: string;
  passage_text: string;
  highlight_spans: [number, number][];
  relax_count: number;
  dropped_subgoals: string[];
}

export interface Health {
  status: string;
  passages: number;
  background_clauses: number;
}
