#!/usr/bin/env node
// Pinned stand-in for the real dependency parser used when regenerating
// fixtures on machines without the full NLP stack. Known sentences return
// their frozen reference parses; anything else gets a flat deterministic
// tree (last word token as a NOUN root).

const VERSION = "mock-parser 1.0.0";

const CANNED = {
  "Chinese paper cuttings in a shop .": [
    [1, "Chinese", "chinese", "ADJ", 3, "amod"],
    [2, "paper", "paper", "NOUN", 3, "compound"],
    [3, "cuttings", "cuttings", "NOUN", 0, "root"],
    [4, "in", "in", "ADP", 6, "case"],
    [5, "a", "a", "DET", 6, "det"],
    [6, "shop", "shop", "NOUN", 3, "nmod"],
    [7, ".", ".", "PUNCT", 3, "punct"],
  ],
  "A torii is a traditional Japanese gate .": [
    [1, "A", "a", "DET", 2, "det"],
    [2, "torii", "torii", "NOUN", 7, "nsubj"],
    [3, "is", "be", "AUX", 7, "cop"],
    [4, "a", "a", "DET", 7, "det"],
    [5, "traditional", "traditional", "ADJ", 7, "amod"],
    [6, "Japanese", "japanese", "ADJ", 7, "amod"],
    [7, "gate", "gate", "NOUN", 0, "root"],
    [8, ".", ".", "PUNCT", 7, "punct"],
  ],
};

if (process.argv.includes("--version")) {
  process.stdout.write(VERSION + "\n");
  process.exit(0);
}

function fallbackParse(words) {
  let rootIdx = words.length;
  for (let i = words.length; i >= 1; i--) {
    if (/^[A-Za-z]+$/.test(words[i - 1])) {
      rootIdx = i;
      break;
    }
  }
  return words.map((w, i) => {
    const index = i + 1;
    if (index === rootIdx) return [index, w, w.toLowerCase(), "NOUN", 0, "root"];
    if (/^[.,!?;:]+$/.test(w)) return [index, w, w, "PUNCT", rootIdx, "punct"];
    if (["a", "an", "the"].includes(w.toLowerCase()))
      return [index, w, w.toLowerCase(), "DET", rootIdx, "det"];
    return [index, w, w.toLowerCase(), "NOUN", rootIdx, "compound"];
  });
}

let input = "";
process.stdin.setEncoding("utf-8");
process.stdin.on("data", (chunk) => (input += chunk));
process.stdin.on("end", () => {
  const out = [];
  for (const line of input.split("\n")) {
    const sentence = line.trim();
    if (!sentence) continue;
    const rows = CANNED[sentence] || fallbackParse(sentence.split(/\s+/));
    out.push(`# text = ${sentence}`);
    for (const [id, form, lemma, upos, head, deprel] of rows) {
      out.push([id, form, lemma, upos, "_", "_", head, deprel, "_", "_"].join("\t"));
    }
    out.push("");
  }
  process.stdout.write(out.join("\n") + (out.length ? "\n" : ""));
});
