import { describe, expect, it } from 'vitest';

import { buildCard, confidencePercent, relaxationLabel } from '../src/cards.js';
import type { AnswerRecord } from '../src/types.js';

function record(overrides: Partial<AnswerRecord> = {}): AnswerRecord {
  return {
    answer_text: 'berlin',
    bindings: { X: 'berlin' },
    confidence: 0.934,
    passage_id: 'p1',
    passage_text: 'Berlin is the capital of Germany.',
    highlight_spans: [
      [0, 6],
      [25, 32],
    ],
    relax_count: 0,
    dropped_subgoals: [],
    ...overrides,
  };
}

describe('confidencePercent', () => {
  it('formats with one decimal', () => {
    expect(confidencePercent(0.934)).toBe('93.4%');
    expect(confidencePercent(1)).toBe('100.0%');
    expect(confidencePercent(0)).toBe('0.0%');
  });
});

describe('relaxationLabel', () => {
  it('pluralizes', () => {
    expect(relaxationLabel(1)).toBe('1 subgoal dropped');
    expect(relaxationLabel(2)).toBe('2 subgoals dropped');
  });
});

describe('buildCard', () => {
  it('shows rank, answer, confidence, and the source id', () => {
    const card = buildCard(record(), 1);
    expect(card.querySelector('h2')?.textContent).toBe('1. berlin');
    expect(card.querySelector('.confidence')?.textContent).toBe('93.4%');
    expect(card.querySelector('.source')?.textContent).toBe('p1');
  });

  it('marks exactly the payload spans and keeps the text intact', () => {
    const card = buildCard(record(), 1);
    const passage = card.querySelector('.passage') as HTMLElement;
    const marks = Array.from(passage.querySelectorAll('mark')).map((m) => m.textContent);
    expect(marks).toEqual(['Berlin', 'Germany']);
    expect(passage.textContent).toBe('Berlin is the capital of Germany.');
  });

  it('omits the relaxation badge for strict proofs', () => {
    const card = buildCard(record(), 1);
    expect(card.querySelector('.badge')).toBeNull();
  });

  it('shows the relaxation badge with the dropped subgoals', () => {
    const card = buildCard(
      record({ relax_count: 1, dropped_subgoals: ['river(X)'] }),
      2,
    );
    const badge = card.querySelector('.badge') as HTMLElement;
    expect(badge.textContent).toBe('1 subgoal dropped');
    expect(badge.title).toBe('river(X)');
  });
});
