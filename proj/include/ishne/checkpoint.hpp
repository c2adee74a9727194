#pragma once

#include <string>

#include "ishne/model.hpp"

namespace ishne {

// Versioned text container for model parameters.
//
//   ishne-checkpoint 1
//   feature_dim <int>            ... header key/value lines
//   metapaths <spec,spec,...>    meta-path strings, e.g. P-A-P
//   param <name> <rows> <cols>   followed by one line of rows*cols
//   <row-major values>           space-separated shortest-round-trip doubles
//   end
//
// Parameter names follow the canonical enumeration (M.<path>, P.<path>,
// a.<path>.head<k>, W_Q, W_K, W_V, q, C). Values reload bit-exactly.
void save_checkpoint(const std::string& path, const IshneModel& model);
IshneModel load_checkpoint(const std::string& path);

// Rejects a model whose shapes cannot run on the given graph data.
void require_compatible(const IshneModel& model, Index feature_dim,
                        int num_classes);

}  // namespace ishne
