/**
 * This file is part of concept-lab.
 *
 * Copyright 2026 The concept-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "clab/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "clab/error.hpp"

namespace clab::nn {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'L', 'A', 'B', 'P', 'R', 'M', '1'};

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    void read(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), std::streamsize(n));
        if (std::size_t(in_.gcount()) != n) throw ParseError("model state truncated", offset_ + std::size_t(in_.gcount()));
        offset_ += n;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        read(&v, 8);
        return v;
    }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

}  // namespace

void save_state(const Network& net, std::ostream& out) {
    out.write(kMagic, sizeof kMagic);
    const auto state = net.state();
    put_u64(out, state.size());
    for (const Tensor* t : state) {
        put_u64(out, t->rank());
        for (std::size_t d : t->shape()) put_u64(out, d);
        out.write(reinterpret_cast<const char*>(t->values().data()), std::streamsize(t->size() * sizeof(double)));
    }
    if (!out) throw IoError("failed to write model state");
}

void load_state(Network& net, std::istream& in) {
    Reader r(in);
    char magic[8];
    r.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw ParseError("not a model state file (bad magic)", 0);
    auto state = net.state();
    const std::size_t at_count = r.offset();
    if (r.u64() != state.size()) throw ParseError("model state holds a different number of tensors", at_count);
    for (Tensor* t : state) {
        const std::size_t at = r.offset();
        Tensor::Shape shape(r.u64());
        for (auto& d : shape) d = r.u64();
        if (shape != t->shape()) {
            throw ParseError("stored tensor " + shape_string(shape) + " does not match " + shape_string(t->shape()), at);
        }
        r.read(t->values().data(), t->size() * sizeof(double));
    }
}

namespace {

const char* loss_name(LossKind k) { return k == LossKind::bce ? "bce" : "mse"; }

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
    j = {{"epochs", cfg.epochs}, {"batch_size", cfg.batch_size}, {"seed", cfg.seed}, {"loss", loss_name(cfg.loss)}};
    if (const auto* a = std::get_if<Adam>(&cfg.optimizer)) {
        j["optimizer"] = {{"kind", "adam"}, {"lr", a->lr}, {"beta1", a->beta1}, {"beta2", a->beta2}, {"eps", a->eps}};
    } else {
        j["optimizer"] = {{"kind", "sgd"}, {"lr", std::get<Sgd>(cfg.optimizer).lr}};
    }
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    const auto loss = j.at("loss").get<std::string>();
    if (loss != "bce" && loss != "mse") throw ConfigError("unknown loss '" + loss + "'");
    cfg.loss = loss == "bce" ? LossKind::bce : LossKind::mse;
    const auto& opt = j.at("optimizer");
    const auto kind = opt.at("kind").get<std::string>();
    if (kind == "adam") {
        cfg.optimizer = Adam{opt.at("lr").get<double>(), opt.at("beta1").get<double>(), opt.at("beta2").get<double>(),
                             opt.at("eps").get<double>()};
    } else if (kind == "sgd") {
        cfg.optimizer = Sgd{opt.at("lr").get<double>()};
    } else {
        throw ConfigError("unknown optimizer '" + kind + "'");
    }
}

}  // namespace clab::nn
