// Artifact manifests: content-addressed run records.
//
// A manifest lists every file a phase produced, keyed by path relative to
// the output directory, with FNV-1a checksums. Reruns with the same config
// and seed must reproduce manifests byte for byte, so manifests carry no
// wall-clock data (timing lives in the JSONL logs, which are listed by name
// but never checksummed) and no execution-layout fields: the config echo is
// the experiment identity, which excludes workers and output placement.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gratstat/config.hpp"
#include "gratstat/core.hpp"
#include "gratstat/fnv.hpp"

namespace gratstat {

// Experiment identity: the config minus orchestration-only fields. Two runs
// that differ only in worker count or output directory are the same
// experiment and must interoperate (and hash identically).
inline Json config_identity_json(const ExperimentConfig &c) {
  Json j = config_to_json(c);
  j.erase("workers");
  j.erase("output");
  return j;
}

inline std::string config_identity_hash(const ExperimentConfig &c) {
  return fnv_hex(fnv1a(config_identity_json(c).dump()));
}

struct Manifest {
  std::string kind;               // dataset | recon | stats | run
  Json config;                    // identity echo
  std::string config_hash;
  std::uint64_t seed = 0;
  Json files = Json::object();    // relative path -> checksum
  std::vector<std::string> logs;  // relative paths, unchecksummed
  Json extra = Json::object();    // kind-specific payload
};

inline Manifest make_manifest(const std::string &kind, const ExperimentConfig &c) {
  Manifest m;
  m.kind = kind;
  m.config = config_identity_json(c);
  m.config_hash = config_identity_hash(c);
  m.seed = c.schedule.seed;
  return m;
}

inline Json manifest_to_json(const Manifest &m) {
  Json j;
  j["kind"] = m.kind;
  j["config"] = m.config;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["files"] = m.files;
  j["logs"] = m.logs;
  j["extra"] = m.extra;
  return j;
}

inline Manifest manifest_from_json(const Json &j) {
  Manifest m;
  try {
    m.kind = j.at("kind").get<std::string>();
    m.config = j.at("config");
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.files = j.at("files");
    m.logs = j.at("logs").get<std::vector<std::string>>();
    m.extra = j.at("extra");
  } catch (const Json::exception &e) {
    throw ArtifactError(std::string("manifest: malformed document: ") + e.what());
  }
  return m;
}

inline void write_json_file(const std::filesystem::path &path, const Json &j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw ArtifactError("write failed: " + path.string());
}

inline Json read_json_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read: " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception &e) {
    throw ArtifactError("malformed json in " + path.string() + ": " + e.what());
  }
}

inline void record_file(Manifest &m, const std::filesystem::path &outdir,
                        const std::string &rel) {
  m.files[rel] = fnv_file_hex((outdir / rel).string());
}

inline void write_manifest(const Manifest &m, const std::filesystem::path &outdir,
                           const std::string &rel) {
  write_json_file(outdir / rel, manifest_to_json(m));
}

inline Manifest read_manifest(const std::filesystem::path &outdir, const std::string &rel) {
  return manifest_from_json(read_json_file(outdir / rel));
}

// Guard used by consuming phases: the producing manifest must belong to the
// same experiment identity, and every checksummed artifact must verify.
inline void require_same_experiment(const Manifest &m, const ExperimentConfig &c,
                                    const std::string &what) {
  const std::string want = config_identity_hash(c);
  if (m.config_hash != want)
    throw ArtifactError(what + ": config hash mismatch (manifest " + m.config_hash +
                        ", config " + want + ")");
}

inline void verify_manifest_files(const Manifest &m, const std::filesystem::path &outdir) {
  for (auto it = m.files.begin(); it != m.files.end(); ++it) {
    const std::string got = fnv_file_hex((outdir / it.key()).string());
    if (got != it.value().get<std::string>())
      throw ArtifactError("checksum mismatch for " + it.key() + " (manifest " +
                          it.value().get<std::string>() + ", file " + got + ")");
  }
}

} // namespace gratstat
