#include "ecgforge/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

namespace ecgforge::checkpoint {

namespace {

constexpr char kMagic[4] = {'E', 'C', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> dims;
  const std::vector<double>* data;
  std::vector<double>* mutable_data;
};

std::vector<NamedTensor> tensor_table(models::Model& model) {
  std::vector<NamedTensor> out;
  for (auto& p : model.params)
    out.push_back({p.name, p.var->shape, &p.var->val, &p.var->val});
  if (auto* bn = model.input_bn()) {
    out.push_back({"input_bn.running_mean", {bn->running_mean.size()}, &bn->running_mean,
                   &bn->running_mean});
    out.push_back({"input_bn.running_var", {bn->running_var.size()}, &bn->running_var,
                   &bn->running_var});
  }
  return out;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save(const models::Model& model, const std::string& path) {
  auto& m = const_cast<models::Model&>(model);
  auto table = tensor_table(m);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint " + path);
  f.write(kMagic, 4);
  std::uint32_t ver = kVersion;
  f.write(reinterpret_cast<const char*>(&ver), 4);
  put_u64(f, table.size());
  std::uint64_t offset = 0;
  for (const auto& t : table) {
    put_u64(f, t.name.size());
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u64(f, t.dims.size());
    for (auto d : t.dims) put_u64(f, d);
    put_u64(f, offset);
    offset += t.data->size() * sizeof(double);
  }
  for (const auto& t : table)
    f.write(reinterpret_cast<const char*>(t.data->data()),
            static_cast<std::streamsize>(t.data->size() * sizeof(double)));
}

void load(models::Model& model, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read checkpoint " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad checkpoint magic in " + path);
  std::uint32_t ver = 0;
  f.read(reinterpret_cast<char*>(&ver), 4);
  if (ver != kVersion) throw FormatError("unsupported checkpoint version");
  const std::uint64_t count = get_u64(f);
  struct Entry {
    std::string name;
    std::vector<std::size_t> dims;
    std::uint64_t offset;
  };
  std::vector<Entry> dir(count);
  for (auto& e : dir) {
    const auto nlen = get_u64(f);
    e.name.resize(nlen);
    f.read(e.name.data(), static_cast<std::streamsize>(nlen));
    const auto rank = get_u64(f);
    e.dims.resize(rank);
    for (auto& d : e.dims) d = get_u64(f);
    e.offset = get_u64(f);
  }
  const auto payload_start = f.tellg();

  auto table = tensor_table(model);
  std::map<std::string, NamedTensor*> by_name;
  for (auto& t : table) by_name[t.name] = &t;
  if (dir.size() != table.size()) throw FormatError("checkpoint tensor count mismatch");
  for (const auto& e : dir) {
    auto it = by_name.find(e.name);
    if (it == by_name.end()) throw FormatError("unexpected tensor " + e.name + " in checkpoint");
    auto* t = it->second;
    if (e.dims != t->dims) throw ShapeError("shape mismatch for tensor " + e.name);
    f.seekg(payload_start + static_cast<std::streamoff>(e.offset));
    f.read(reinterpret_cast<char*>(t->mutable_data->data()),
           static_cast<std::streamsize>(t->mutable_data->size() * sizeof(double)));
  }
  if (!f) throw FormatError("truncated checkpoint " + path);
}

void save_ensemble(const models::Ensemble& ensemble, const std::string& dir,
                   const std::string& stem) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < ensemble.members.size(); ++i)
    save(*ensemble.members[i],
         (std::filesystem::path(dir) / (stem + "_m" + std::to_string(i) + ".ckpt")).string());
  std::ofstream mf(std::filesystem::path(dir) / (stem + ".spec"));
  mf << ensemble.members[0]->spec.manifest();
  mf << "members = " << ensemble.members.size() << "\n";
}

models::Ensemble load_ensemble(const models::ModelSpec& spec, const std::string& dir,
                               const std::string& stem, std::size_t members) {
  models::Ensemble e;
  for (std::size_t i = 0; i < members; ++i) {
    auto m = models::build_model(spec, 0);
    load(*m, (std::filesystem::path(dir) / (stem + "_m" + std::to_string(i) + ".ckpt")).string());
    e.members.push_back(m);
  }
  return e;
}

}  // namespace ecgforge::checkpoint
