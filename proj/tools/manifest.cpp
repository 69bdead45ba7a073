#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "tndve/errors.hpp"

namespace tndve::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::File, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return hex.str();
}

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

nlohmann::json RunManifest::to_json(const std::filesystem::path& base) const {
  nlohmann::json in = nlohmann::json::array(), out = nlohmann::json::array();
  for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  for (const auto& p : outputs)
    out.push_back({{"path", std::filesystem::relative(p, base).generic_string()}, {"sha256", sha256_file(p)}});
  return {{"command", command}, {"argv", argv},        {"config", config}, {"seed", seed},
          {"version", kVersion}, {"started", started}, {"finished", finished},
          {"cwd", cwd.string()}, {"inputs", in},       {"outputs", out}};
}

void RunManifest::write(const std::filesystem::path& file, const std::filesystem::path& base) const {
  std::ofstream f(file);
  if (!f) throw Error(ErrorCode::File, "cannot write " + file.string());
  f << to_json(base).dump(2) << '\n';
}

}  // namespace tndve::cli
