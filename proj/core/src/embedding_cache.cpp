#include "ragmt/retrieval.hpp"

#include <fstream>
#include <mutex>

#include "ragmt/error.hpp"

namespace ragmt {

using json = nlohmann::json;

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_, std::ios::binary);
  if (!in) return;  // created on first store
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      entries_[make_key(rec.at("encoder").get<std::string>(), rec.at("text").get<std::string>())] =
          rec.at("vector").get<std::vector<double>>();
    } catch (const json::exception&) {
      // A torn final line from an interrupted run is dropped; anything
      // earlier is corruption.
      if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path_->string() + ": line " + std::to_string(line_no) +
                          ": corrupt embedding cache record");
      }
    }
  }
}

std::string EmbeddingCache::make_key(std::string_view encoder_id, std::string_view text) {
  std::string key(encoder_id);
  key += '\x1F';
  key += text;
  return key;
}

std::optional<std::vector<double>> EmbeddingCache::find(std::string_view encoder_id,
                                                        std::string_view normalized_text) const {
  std::shared_lock lock(mutex_);
  if (auto it = entries_.find(make_key(encoder_id, normalized_text)); it != entries_.end()) {
    return it->second;
  }
  return std::nullopt;
}

void EmbeddingCache::store(std::string_view encoder_id, std::string_view normalized_text,
                           const std::vector<double>& vector) {
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(make_key(encoder_id, normalized_text), vector);
  if (!inserted || !path_) return;
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  std::ofstream out(*path_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to embedding cache " + path_->string());
  out << json{{"encoder", encoder_id}, {"text", normalized_text}, {"vector", vector}}.dump()
      << '\n';
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace ragmt
