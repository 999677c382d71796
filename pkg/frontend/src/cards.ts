/** DOM builders for answer cards. Order, confidence, and spans come straight
 * from the payload; the client never re-scores or re-sorts anything.
 */

import { markByteSpans } from './highlight.js';
import type { AnswerRecord } from './types.js';

export function confidencePercent(confidence: number): string {
  return `${(confidence * 100).toFixed(1)}%`;
}

export function relaxationLabel(count: number): string {
  return count === 1 ? '1 subgoal dropped' : `${count} subgoals dropped`;
}

export function buildCard(record: AnswerRecord, rank: number): HTMLElement {
  const card = document.createElement('article');
  card.className = 'card';

  const head = document.createElement('header');
  const title = document.createElement('h2');
  title.textContent = `${rank}. ${record.answer_text}`;
  const confidence = document.createElement('span');
  confidence.className = 'confidence';
  confidence.textContent = confidencePercent(record.confidence);
  head.append(title, confidence);
  if (record.relax_count > 0) {
    const badge = document.createElement('span');
    badge.className = 'badge';
    badge.textContent = relaxationLabel(record.relax_count);
    badge.title = record.dropped_subgoals.join(', ');
    head.append(badge);
  }
  card.append(head);

  const passage = document.createElement('p');
  passage.className = 'passage';
  for (const segment of markByteSpans(record.passage_text, record.highlight_spans)) {
    if (segment.marked) {
      const mark = document.createElement('mark');
      mark.textContent = segment.text;
      passage.append(mark);
    } else {
      passage.append(segment.text);
    }
  }
  card.append(passage);

  const source = document.createElement('footer');
  source.className = 'source';
  source.textContent = record.passage_id;
  card.append(source);
  return card;
}
