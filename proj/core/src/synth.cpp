// SPDX-License-Identifier: Apache-2.0
#include "searchrl/synth.hpp"

#include <cstdio>
#include <set>
#include <string>

#include "searchrl/common.hpp"
#include "searchrl/episode.hpp"
#include "searchrl/text.hpp"

namespace searchrl {

const std::vector<std::string> kDefaultAtomLabels = {"Plan", "Reflection", "Verification"};

namespace {

const char* kSyllables[] = {"va", "zel", "mak", "tun", "ris", "bel", "dor",
                            "fia", "gul", "hap", "jin", "kol", "mer", "nox",
                            "pra", "qui", "sor", "tez", "ulm", "wyn"};

std::string fresh_word(std::mt19937_64& rng, std::set<std::string>& used) {
  for (;;) {
    int syllables = 2 + static_cast<int>(rng() % 2);
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += kSyllables[rng() % (sizeof(kSyllables) / sizeof(kSyllables[0]))];
    }
    if (used.insert(w).second) return w;
  }
}

std::string doc_id_for(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "d%03d", i);
  return buf;
}

}  // namespace

SynthTask make_singlehop_task(int n_items, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(mix_seed(seed, 0x51)));
  std::set<std::string> used = {"capital", "of", "the", "is"};
  SynthTask task;
  std::vector<Document> docs;
  for (int i = 0; i < n_items; ++i) {
    std::string entity = fresh_word(rng, used);
    std::string answer = fresh_word(rng, used);
    Document doc;
    doc.doc_id = doc_id_for(i);
    doc.title = entity;
    doc.body = "the capital of " + entity + " is " + answer;
    docs.push_back(std::move(doc));
    QAItem item;
    item.question = "capital of " + entity;
    item.reference_answers = {answer};
    item.required_doc_ids = {doc_id_for(i)};
    task.items.push_back(std::move(item));
  }
  task.corpus = Corpus::build(std::move(docs));
  return task;
}

SynthTask make_multihop_task(int n_items, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(mix_seed(seed, 0x52)));
  std::set<std::string> used = {"capital", "of", "the", "is", "located", "in", "country"};
  SynthTask task;
  std::vector<Document> docs;
  for (int i = 0; i < n_items; ++i) {
    std::string entity = fresh_word(rng, used);
    std::string country = fresh_word(rng, used);
    std::string answer = fresh_word(rng, used);
    Document hop1;
    hop1.doc_id = doc_id_for(2 * i);
    hop1.title = entity;
    hop1.body = entity + " is located in country " + country;
    Document hop2;
    hop2.doc_id = doc_id_for(2 * i + 1);
    hop2.title = country;
    hop2.body = "the capital of " + country + " is " + answer;
    docs.push_back(std::move(hop1));
    docs.push_back(std::move(hop2));
    QAItem item;
    item.question = "capital of country of " + entity;
    item.reference_answers = {answer};
    item.required_doc_ids = {doc_id_for(2 * i), doc_id_for(2 * i + 1)};
    task.items.push_back(std::move(item));
  }
  task.corpus = Corpus::build(std::move(docs));
  return task;
}

Vocab build_task_vocab(const Corpus& corpus, const std::vector<QAItem>& items,
                       const TagSchema& schema, const std::vector<std::string>& atom_labels) {
  std::vector<std::string> tokens;
  for (const std::string& name :
       {schema.think, schema.tool_call, schema.tool_response, schema.answer}) {
    tokens.push_back("<" + name + ">");
    tokens.push_back("</" + name + ">");
  }
  for (const std::string& label : atom_labels) {
    tokens.push_back("<" + label + ">");
    tokens.push_back("</" + label + ">");
  }
  for (const char* tok : kPayloadPrefixTokens) tokens.push_back(tok);
  tokens.push_back(kPayloadSuffixToken);

  std::set<std::string> content;
  auto add_text = [&](const std::string& text) {
    for (const std::string& tok : tokenize(text)) {
      if (!is_tag_token(tok)) content.insert(tok);
    }
  };
  for (const Document& doc : corpus.documents) {
    add_text(doc.title);
    add_text(doc.body);
  }
  for (const QAItem& item : items) {
    add_text(item.question);
    for (const std::string& ref : item.reference_answers) add_text(ref);
  }
  for (const std::string& tok : content) tokens.push_back(tok);
  return Vocab::from_tokens(std::move(tokens));
}

}  // namespace searchrl
