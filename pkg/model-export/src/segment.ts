/**
 * Sentence segmentation identical to the pipeline's rules: split at line
 * breaks and terminal punctuation runs, normalize whitespace, then re-split
 * oversized sentences at word boundaries so the approximate token count
 * (floor of 1.3 x whitespace words) stays within the budget.
 *
 * Parity with the pipeline is pinned by fixtures/segmentation-parity.json.
 */

export interface SentenceChunk {
  text: string;
  approxTokens: number;
}

export const DEFAULT_TOKEN_BUDGET = 128;
const TOKEN_FACTOR = 1.3;

// mirrors Python str.splitlines() line boundaries; built from a string so
// the compiler never re-emits U+2028/U+2029 as raw (regex-breaking) bytes
const LINE_BREAK_RE = new RegExp(
  "\\r\\n|[\\n\\r\\v\\f\\u001c\\u001d\\u001e\\u0085\\u2028\\u2029]",
);
const TERMINAL_SPLIT_RE = /(?<=[.!?;:])(?![.!?;:])\s*/;
const WORD_CHAR_RE = /[\p{L}\p{M}\p{N}_]/u;
const WS_RUN_RE = /\s+/g;

export function approxTokenCount(text: string): number {
  return Math.floor(TOKEN_FACTOR * words(text).length);
}

function words(text: string): string[] {
  return text.split(WS_RUN_RE).filter((w) => w.length > 0);
}

function maxWordsFor(tokenBudget: number): number {
  let count = Math.max(1, Math.floor((tokenBudget + 1) / TOKEN_FACTOR));
  while (Math.floor(TOKEN_FACTOR * (count + 1)) <= tokenBudget) {
    count += 1;
  }
  while (count > 1 && Math.floor(TOKEN_FACTOR * count) > tokenBudget) {
    count -= 1;
  }
  return count;
}

export function segment(
  text: string,
  tokenBudget: number = DEFAULT_TOKEN_BUDGET,
): SentenceChunk[] {
  if (tokenBudget < 1) {
    throw new Error("tokenBudget must be >= 1");
  }
  const sentences: string[] = [];
  for (const line of text.split(LINE_BREAK_RE)) {
    for (const rawPiece of line.split(TERMINAL_SPLIT_RE)) {
      const piece = rawPiece.replace(WS_RUN_RE, " ").trim();
      if (!piece) {
        continue;
      }
      if (WORD_CHAR_RE.test(piece)) {
        sentences.push(piece);
      } else if (sentences.length > 0) {
        // stray punctuation attaches to the previous sentence
        sentences[sentences.length - 1] += piece;
      } else {
        sentences.push(piece);
      }
    }
  }
  const wordy = sentences.filter((s) => WORD_CHAR_RE.test(s));

  const budgetWords = maxWordsFor(tokenBudget);
  const chunks: SentenceChunk[] = [];
  for (const sentence of wordy) {
    const parts = words(sentence);
    for (let start = 0; start < parts.length; start += budgetWords) {
      const chunkText = parts.slice(start, start + budgetWords).join(" ");
      chunks.push({ text: chunkText, approxTokens: approxTokenCount(chunkText) });
    }
  }
  return chunks;
}
