/** Reader for the pipeline's proposal text format:
 *  one `image_id x y w h score` record per line, descending score. */

export interface Proposal {
  x: number;
  y: number;
  w: number;
  h: number;
  score: number;
}

export interface ProposalFile {
  imageId: string;
  proposals: Proposal[];
}

export function parseProposals(text: string): ProposalFile {
  let imageId: string | null = null;
  const proposals: Proposal[] = [];
  const lines = text.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const parts = line.split(/\s+/);
    if (parts.length !== 6) {
      throw new Error(`proposal line ${i + 1}: expected 6 fields, got ${parts.length}`);
    }
    const [id, xs, ys, ws, hs, ss] = parts;
    if (imageId === null) {
      imageId = id;
    } else if (id !== imageId) {
      throw new Error(`proposal line ${i + 1}: mixed image ids ${imageId} and ${id}`);
    }
    const p = { x: Number(xs), y: Number(ys), w: Number(ws), h: Number(hs), score: Number(ss) };
    if (![p.x, p.y, p.w, p.h].every(Number.isInteger) || p.w < 1 || p.h < 1) {
      throw new Error(`proposal line ${i + 1}: bad box ${xs} ${ys} ${ws} ${hs}`);
    }
    if (!Number.isFinite(p.score)) {
      throw new Error(`proposal line ${i + 1}: bad score ${ss}`);
    }
    proposals.push(p);
  }
  if (imageId === null) throw new Error('no proposal records found');
  return { imageId, proposals };
}
