// service.hpp - Local JSON-over-HTTP service backed by a directory of `.cdag`
// files.
//
//   GET  /models                         list {name, hash}
//   GET  /models/{name}[?format=dsl]     document JSON (or DSL text)
//   PUT  /models/{name}                  DSL or JSON body; If-Match required when replacing
//   POST /models/{name}/analyze          analysis report
//   POST /models/{name}/dsep             {x, y, given} -> {..., separated}
//   POST /models/{name}/implications     {scope?, max_given?}
//   POST /models/{name}/requirements     {exposure?, outcome?, stratified_monitors?}
//   GET  /models/{name}/export?format=dot|json|dsl
//
// Every model response carries the stored text's content hash in an ETag.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "causal/model.hpp"

namespace httplib
{
class Server;
}

namespace causal
{

/// 16 hex digits of FNV-1a 64 over `text`.
std::string content_hash(std::string_view text);

/// Model names are restricted to [A-Za-z0-9_-]+ so they map onto file names.
bool valid_model_name(std::string_view name);

/// One model per `<dir>/<name>.cdag`, stored in canonical DSL form. Reads see
/// complete snapshots; writes to the same model are serialised.
class ModelStore
{
public:
  explicit ModelStore(std::filesystem::path dir);

  struct Snapshot
  {
    ModelDocument doc;
    std::string text;
    std::string hash;
  };

  std::vector<std::string> names() const;
  std::optional<Snapshot> load(const std::string & name) const;

  enum class PutStatus { created, replaced, conflict };
  struct PutResult
  {
    PutStatus status;
    std::string hash;  // new hash, or the current one on conflict
  };
  /// `expected` is the hash the caller last saw; it must match when the model
  /// exists and be absent when it does not.
  PutResult put(const std::string & name, const ModelDocument & doc, const std::optional<std::string> & expected);

private:
  std::shared_mutex & lock_for(const std::string & name) const;
  std::filesystem::path file(const std::string & name) const;

  std::filesystem::path dir_;
  mutable std::mutex locks_mutex_;
  mutable std::map<std::string, std::unique_ptr<std::shared_mutex>> locks_;
};

/// Registers the routes on `server`. The store must outlive the server.
void register_routes(httplib::Server & server, ModelStore & store);

bool is_loopback(std::string_view host);

}  // namespace causal
