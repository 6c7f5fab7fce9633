// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "searchrl/environment.hpp"
#include "searchrl/policy.hpp"

namespace searchrl {

struct SynthTask {
  Corpus corpus;
  std::vector<QAItem> items;
};

// One fact per document: "capital of <entity>" is answerable from a single
// retrieval (or memorized directly at toy scale).
SynthTask make_singlehop_task(int n_items, std::uint64_t seed);

// Facts split across two documents per item so one retrieval cannot answer:
// entity -> country in one document, country -> capital in the other.
SynthTask make_multihop_task(int n_items, std::uint64_t seed);

extern const std::vector<std::string> kDefaultAtomLabels; // Plan, Reflection, Verification

// Vocabulary covering the schema tags, atom-label tag pairs, the tool-call
// payload scaffold, and every content word in the task.
Vocab build_task_vocab(const Corpus& corpus, const std::vector<QAItem>& items,
                       const TagSchema& schema = {},
                       const std::vector<std::string>& atom_labels = kDefaultAtomLabels);

}  // namespace searchrl
