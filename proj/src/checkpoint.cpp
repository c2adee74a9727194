#include "ishne/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "ishne/format.hpp"

namespace ishne {

namespace {

constexpr const char* kMagic = "ishne-checkpoint";
constexpr int kVersion = 1;

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string part;
  for (char c : text) {
    if (c == ',') {
      out.push_back(part);
      part.clear();
    } else {
      part += c;
    }
  }
  out.push_back(part);
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const IshneModel& model) {
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  out << "feature_dim " << model.feature_dim << '\n';
  out << "hidden_dim " << model.hidden_dim << '\n';
  out << "heads " << model.heads << '\n';
  out << "fusion_dim " << model.fusion_dim << '\n';
  out << "num_classes " << model.num_classes << '\n';
  out << "attention_activation " << activation_name(model.attention_activation)
      << '\n';
  out << "aggregation_activation "
      << activation_name(model.aggregation_activation) << '\n';
  out << "metapaths ";
  for (std::size_t p = 0; p < model.metapath_specs.size(); ++p) {
    if (p) out << ',';
    out << model.metapath_specs[p];
  }
  out << '\n';

  visit_parameters(model, [&out](const std::string& name, const Mat& value) {
    out << "param " << name << ' ' << value.rows() << ' ' << value.cols()
        << '\n';
    for (Index i = 0; i < value.rows(); ++i)
      for (Index j = 0; j < value.cols(); ++j) {
        if (i + j) out << ' ';
        out << format_double(value(i, j));
      }
    out << '\n';
  });
  out << "end\n";

  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorCode::parse_error, "cannot write '" + path + "'");
  file << out.str();
}

IshneModel load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(ErrorCode::parse_error, "cannot open '" + path + "'");

  std::string magic;
  int version = 0;
  if (!(file >> magic >> version) || magic != kMagic)
    fail(ErrorCode::checkpoint_mismatch, "'" + path + "' is not a checkpoint");
  if (version != kVersion)
    fail(ErrorCode::checkpoint_mismatch,
         "unsupported checkpoint version " + std::to_string(version));

  std::map<std::string, std::string> header;
  std::string key;
  while (file >> key && key != "param" && key != "end") {
    std::string value;
    std::getline(file >> std::ws, value);
    header[key] = value;
  }

  const auto header_int = [&header](const std::string& k) {
    auto it = header.find(k);
    if (it == header.end())
      fail(ErrorCode::checkpoint_mismatch, "missing header field '" + k + "'");
    return static_cast<int>(parse_int(it->second));
  };
  const auto header_str = [&header](const std::string& k) {
    auto it = header.find(k);
    if (it == header.end())
      fail(ErrorCode::checkpoint_mismatch, "missing header field '" + k + "'");
    return it->second;
  };

  TrainConfig config;
  config.hidden_dim = header_int("hidden_dim");
  config.heads = header_int("heads");
  config.fusion_dim = header_int("fusion_dim");
  config.attention_activation =
      activation_from_name(header_str("attention_activation"));
  config.aggregation_activation =
      activation_from_name(header_str("aggregation_activation"));

  IshneModel model =
      init_model(header_int("feature_dim"), header_int("num_classes"),
                 split_csv(header_str("metapaths")), config);

  // Overwrite the init values with the stored blocks.
  std::map<std::string, Mat> blocks;
  while (key == "param") {
    std::string name;
    Index rows = 0, cols = 0;
    if (!(file >> name >> rows >> cols) || rows < 1 || cols < 1)
      fail(ErrorCode::checkpoint_mismatch, "malformed param block");
    Mat value(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) {
        std::string token;
        if (!(file >> token))
          fail(ErrorCode::checkpoint_mismatch,
               "param '" + name + "' is truncated");
        value(i, j) = parse_double(token);
      }
    blocks[name] = std::move(value);
    if (!(file >> key))
      fail(ErrorCode::checkpoint_mismatch, "missing end marker");
  }
  if (key != "end")
    fail(ErrorCode::checkpoint_mismatch, "missing end marker");

  std::size_t used = 0;
  visit_parameters(model, [&blocks, &used](const std::string& name, Mat& value) {
    auto it = blocks.find(name);
    if (it == blocks.end())
      fail(ErrorCode::checkpoint_mismatch, "checkpoint lacks param '" + name + "'");
    if (it->second.rows() != value.rows() || it->second.cols() != value.cols())
      fail(ErrorCode::checkpoint_mismatch,
           "param '" + name + "' has shape " + std::to_string(it->second.rows()) +
               "x" + std::to_string(it->second.cols()) + ", expected " +
               std::to_string(value.rows()) + "x" + std::to_string(value.cols()));
    value = it->second;
    ++used;
  });
  if (used != blocks.size())
    fail(ErrorCode::checkpoint_mismatch,
         "checkpoint carries " + std::to_string(blocks.size() - used) +
             " unknown param blocks");
  return model;
}

void require_compatible(const IshneModel& model, Index feature_dim,
                        int num_classes) {
  if (model.feature_dim != feature_dim)
    fail(ErrorCode::checkpoint_mismatch,
         "model expects " + std::to_string(model.feature_dim) +
             "-dim features, graph has " + std::to_string(feature_dim));
  if (num_classes > model.num_classes)
    fail(ErrorCode::checkpoint_mismatch,
         "graph has " + std::to_string(num_classes) + " classes, model only " +
             std::to_string(model.num_classes));
}

}  // namespace ishne
