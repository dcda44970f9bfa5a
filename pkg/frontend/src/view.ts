/**
 * View model: author colors, role assignment, ownership cues.
 *
 * The system author renders in the default text color; each human author
 * gets a distinct color from a fixed 8-color palette (chosen for contrast
 * on a white background), assigned by join order.
 */

import { Doc, SYSTEM_AUTHOR } from "./ot";

export const PALETTE = [
  "#1f77b4", // blue
  "#d62728", // red
  "#2ca02c", // green
  "#9467bd", // purple
  "#ff7f0e", // orange
  "#17becf", // teal
  "#e377c2", // pink
  "#8c564b", // brown
] as const;

export const DEFAULT_COLOR = "inherit";

export interface Assignment {
  user: number;
  audio_delay_s: number;
  role: string;
  ownership: string | number;
}

export interface Span {
  text: string;
  color: string;
  author: number;
}

export class ViewState {
  private colorByAuthor = new Map<number, string>();

  constructor(joinOrder: number[] = []) {
    joinOrder.forEach((user) => this.colorFor(user));
  }

  colorFor(author: number): string {
    if (author === SYSTEM_AUTHOR) return DEFAULT_COLOR;
    let color = this.colorByAuthor.get(author);
    if (color === undefined) {
      color = PALETTE[this.colorByAuthor.size % PALETTE.length]!;
      this.colorByAuthor.set(author, color);
    }
    return color;
  }

  /** Document split into maximal same-author runs, each with its color. */
  spans(doc: Doc): Span[] {
    const out: Span[] = [];
    for (let i = 0; i < doc.content.length; ) {
      const author = doc.authors[i] ?? SYSTEM_AUTHOR;
      let j = i + 1;
      while (j < doc.content.length && doc.authors[j] === author) j++;
      out.push({
        text: doc.content.slice(i, j),
        color: this.colorFor(author),
        author,
      });
      i = j;
    }
    return out;
  }
}

/**
 * Ownership cue for rotating-chunk scenarios: whether the paragraph with
 * the given index belongs to this user. Advisory only; editing outside
 * owned paragraphs is never blocked.
 */
export function ownsParagraph(
  assignment: Assignment,
  paragraphIndex: number,
  rotationSize: number,
): boolean {
  if (typeof assignment.ownership !== "number") return true;
  return paragraphIndex % rotationSize === assignment.ownership;
}
