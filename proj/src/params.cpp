#include "kfhe/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "kfhe/errors.hpp"

namespace kfhe {

namespace {

using BigInt = boost::multiprecision::cpp_int;

std::vector<u32> values_of(const std::vector<PrimeInfo>& v) {
    std::vector<u32> out;
    out.reserve(v.size());
    for (const auto& p : v) out.push_back(p.value);
    return out;
}

unsigned bit_length(u64 x) {
    unsigned b = 0;
    while (x != 0) {
        ++b;
        x >>= 1;
    }
    return b;
}

// All powers of a root of known order, indexed by exponent mod order.
class PowerTable {
public:
    PowerTable(u32 root, std::size_t order, const Modulus& mod) : pow_(order) {
        u32 acc = 1;
        for (std::size_t i = 0; i < order; ++i) {
            pow_[i] = acc;
            acc = mod.mul(acc, root);
        }
    }
    u32 operator()(u64 e) const { return pow_[e % pow_.size()]; }

private:
    std::vector<u32> pow_;
};

}  // namespace

std::vector<u32> ModulusChain::q_values() const { return values_of(q); }
std::vector<u32> ModulusChain::p_values() const { return values_of(p); }

u32 find_negacyclic_root(u32 q, std::size_t n) {
    if (n == 0 || !is_power_of_two(n)) throw ParameterError("degree must be a power of two");
    const u64 two_n = 2 * static_cast<u64>(n);
    if (q < 3 || (q - 1) % two_n != 0) {
        throw ParameterError("prime " + std::to_string(q) + " is not 1 mod " +
                             std::to_string(two_n));
    }
    const u64 g = smallest_primitive_root(q);
    return static_cast<u32>(pow_mod(g, (q - 1) / two_n, q));
}

PrimeInfo make_prime_info(u32 q, std::size_t n) {
    if (!is_prime(q)) throw ParameterError(std::to_string(q) + " is not prime");
    PrimeInfo info;
    info.value = q;
    info.psi = find_negacyclic_root(q, n);
    info.generator = static_cast<u32>(smallest_primitive_root(q));
    info.psi_inv = static_cast<u32>(pow_mod(info.psi, q - 2, q));
    info.n_inv = static_cast<u32>(inv_mod(n % q, q));
    return info;
}

ModulusChain generate_prime_chain(std::size_t n, std::size_t l_max, std::size_t k,
                                  unsigned bit_size) {
    if (bit_size > 32) throw RangeError("prime width above 32 bits");
    if (n < 2 || !is_power_of_two(n)) throw ParameterError("degree must be a power of two");
    const u64 step = 2 * static_cast<u64>(n);
    const u64 top = u64{1} << bit_size;
    const u64 bottom = u64{1} << (bit_size - 1);
    const std::size_t needed = l_max + 1 + k;
    if (bit_size < 2 || top <= step) {
        throw ParameterError("no prime of " + std::to_string(bit_size) + " bits is 1 mod 2n");
    }

    std::vector<u32> found;
    for (u64 c = ((top - 2) / step) * step + 1; c > bottom && found.size() < needed; c -= step) {
        if (is_prime(c)) found.push_back(static_cast<u32>(c));
        if (c < step) break;
    }
    if (found.size() < needed) {
        throw ParameterError("only " + std::to_string(found.size()) + " primes of " +
                             std::to_string(bit_size) + " bits are 1 mod " +
                             std::to_string(step) + "; " + std::to_string(needed) +
                             " required");
    }

    std::vector<u32> special(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<u32> ciphertext(found.begin() + static_cast<std::ptrdiff_t>(k), found.end());
    return chain_from_primes(n, ciphertext, special);
}

ModulusChain chain_from_primes(std::size_t n, const std::vector<u32>& q,
                               const std::vector<u32>& p) {
    ModulusChain chain;
    chain.n = n;
    std::vector<u32> all(q);
    all.insert(all.end(), p.begin(), p.end());
    std::vector<u32> sorted(all);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ParameterError("modulus chain primes must be distinct");
    }
    for (u32 v : q) chain.q.push_back(make_prime_info(v, n));
    for (u32 v : p) chain.p.push_back(make_prime_info(v, n));
    return chain;
}

NttPlan build_ntt_plan(std::size_t n) {
    if (n < 4 || !is_power_of_two(n)) throw ParameterError("NTT degree must be a power of two >= 4");
    const unsigned log_n = log2_exact(n);
    std::size_t n1 = std::size_t{1} << (log_n / 2);
    n1 = std::min(n1, kMaxSplit);
    return NttPlan{n1, n / n1};
}

TwiddleMatrices build_twiddles(const NttPlan& plan, u32 q, u32 psi, Direction direction) {
    const Modulus mod(q);
    const std::size_t n1 = plan.n1;
    const std::size_t n2 = plan.n2;
    const std::size_t n = plan.n();
    const u32 root = direction == Direction::forward ? psi : static_cast<u32>(inv_mod(psi, q));

    // root has order 2n; root^n2 has order 2*n1 and root^n1 has order 2*n2.
    const PowerTable full(root, 2 * n, mod);
    const u32 root1 = full(n2);
    const u32 root2 = full(n1);
    const PowerTable pow1(root1, 2 * n1, mod);
    const PowerTable pow2(root2, 2 * n2, mod);

    TwiddleMatrices tw;
    tw.direction = direction;
    tw.q = q;
    tw.plan = plan;
    tw.w1 = U32Matrix(n1, n1);
    tw.w2 = U32Matrix(n1, n2);
    tw.w3 = U32Matrix(n2, n2);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n1; ++j) {
            const u64 e = direction == Direction::forward ? 2 * i * j + j : 2 * i * j + i;
            tw.w1(i, j) = pow1(e);
        }
    }
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) tw.w2(i, j) = full(2 * i * j + j);
    for (std::size_t i = 0; i < n2; ++i)
        for (std::size_t j = 0; j < n2; ++j) tw.w3(i, j) = pow2(2 * i * j);
    return tw;
}

SegmentedTwiddles segment_twiddles(const TwiddleMatrices& tw) {
    SegmentedTwiddles seg;
    seg.w1 = segment_matrix(tw.w1, Layout::row_major);
    seg.w2 = segment_matrix(tw.w2, Layout::row_major);
    seg.w3 = segment_matrix(tw.w3, Layout::column_major);
    return seg;
}

PrimeTwiddles build_prime_twiddles(std::size_t n, u32 q) {
    const NttPlan plan = build_ntt_plan(n);
    PrimeTwiddles pt;
    pt.mod = Modulus(q);
    pt.psi = find_negacyclic_root(q, n);
    pt.psi_inv = static_cast<u32>(inv_mod(pt.psi, q));
    pt.n_inv = static_cast<u32>(inv_mod(n % q, q));
    pt.n_inv_shoup = shoup_precompute(pt.n_inv, q);
    pt.fwd = build_twiddles(plan, q, pt.psi, Direction::forward);
    pt.inv = build_twiddles(plan, q, pt.psi, Direction::inverse);
    pt.seg_fwd = segment_twiddles(pt.fwd);
    pt.seg_inv = segment_twiddles(pt.inv);

    const unsigned log_n = log2_exact(n);
    pt.psi_rev.resize(n);
    pt.psi_inv_rev.resize(n);
    pt.psi_rev_shoup.resize(n);
    pt.psi_inv_rev_shoup.resize(n);
    u32 fwd = 1;
    u32 inv = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const u32 r = bit_reverse(static_cast<u32>(i), log_n);
        pt.psi_rev[r] = fwd;
        pt.psi_inv_rev[r] = inv;
        fwd = pt.mod.mul(fwd, pt.psi);
        inv = pt.mod.mul(inv, pt.psi_inv);
    }
    for (std::size_t i = 0; i < n; ++i) {
        pt.psi_rev_shoup[i] = shoup_precompute(pt.psi_rev[i], q);
        pt.psi_inv_rev_shoup[i] = shoup_precompute(pt.psi_inv_rev[i], q);
    }
    return pt;
}

TwiddleFactorSet::TwiddleFactorSet(std::size_t n, const std::vector<u32>& primes)
    : n_(n), plan_(build_ntt_plan(n)) {
    entries_.reserve(primes.size());
    for (u32 q : primes) {
        if (contains(q)) continue;
        entries_.push_back(build_prime_twiddles(n, q));
    }
}

bool TwiddleFactorSet::contains(u32 q) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [q](const PrimeTwiddles& e) { return e.mod.value() == q; });
}

const PrimeTwiddles& TwiddleFactorSet::at(u32 q) const {
    for (const auto& e : entries_)
        if (e.mod.value() == q) return e;
    throw ParameterError("no twiddle factors for prime " + std::to_string(q));
}

PrimeTwiddles& TwiddleFactorSet::mutable_entry(u32 q) {
    return const_cast<PrimeTwiddles&>(static_cast<const TwiddleFactorSet&>(*this).at(q));
}

// ---------------------------------------------------------------------------
// CkksParams

double CkksParams::default_scale() const { return std::ldexp(1.0, static_cast<int>(scale_bits)); }

std::vector<u32> CkksParams::q_basis(std::size_t level) const {
    if (level >= chain.q.size()) throw LevelError("level above the modulus chain");
    std::vector<u32> out;
    for (std::size_t i = 0; i <= level; ++i) out.push_back(chain.q[i].value);
    return out;
}

std::vector<u32> CkksParams::p_basis() const { return chain.p_values(); }

std::vector<u32> CkksParams::extended_basis(std::size_t level) const {
    auto out = q_basis(level);
    for (const auto& p : chain.p) out.push_back(p.value);
    return out;
}

unsigned CkksParams::log_pq() const {
    unsigned total = 0;
    for (const auto& q : chain.q) total += bit_length(q.value);
    for (const auto& p : chain.p) total += bit_length(p.value);
    return total;
}

void CkksParams::validate() const {
    if (!is_power_of_two(n) || n < (1u << 10) || n > (1u << 18)) {
        throw ParameterError("n must be a power of two in [2^10, 2^18]");
    }
    if (dnum == 0 || (l_max + 1) % dnum != 0) {
        throw ParameterError("l_max + 1 must be divisible by dnum");
    }
    if (alpha != (l_max + 1) / dnum) throw ParameterError("alpha must equal (l_max+1)/dnum");
    if (chain.n != n) throw ParameterError("modulus chain built for a different degree");
    if (chain.q.size() != l_max + 1) throw ParameterError("chain must hold l_max + 1 primes");
    if (chain.p.size() != k) throw ParameterError("chain must hold k special primes");
    if (k == 0) throw ParameterError("at least one special prime is required");
    const u64 two_n = 2 * static_cast<u64>(n);
    for (const auto* list : {&chain.q, &chain.p}) {
        for (const auto& pr : *list) {
            if ((pr.value - 1) % two_n != 0) throw ParameterError("prime not 1 mod 2n");
            const u64 q = pr.value;
            if (pow_mod(pr.psi, n, q) != q - 1) throw ParameterError("psi^n != -1");
            if (static_cast<u128>(pr.psi) * pr.psi_inv % q != 1)
                throw ParameterError("psi_inv is not the inverse of psi");
        }
    }
    BigInt big_p = 1;
    for (const auto& pr : chain.p) big_p *= pr.value;
    for (std::size_t j = 0; j < dnum; ++j) {
        BigInt qj = 1;
        for (std::size_t i = j * alpha; i < (j + 1) * alpha; ++i) qj *= chain.q[i].value;
        if (big_p <= qj) {
            throw ParameterError("special modulus P must exceed every decomposition slice Q_j");
        }
    }
}

u64 CkksParams::hash() const {
    u64 h = 0xcbf29ce484222325ULL;
    auto mix = [&h](u64 v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(n);
    mix(l_max);
    mix(k);
    mix(dnum);
    mix(scale_bits);
    for (const auto& q : chain.q) mix(q.value);
    for (const auto& p : chain.p) mix(p.value);
    return h;
}

CkksParams make_params(std::size_t n, std::size_t l_max, std::size_t k, std::size_t dnum,
                       unsigned bit_size, unsigned scale_bits) {
    if (dnum == 0 || (l_max + 1) % dnum != 0) {
        throw ParameterError("l_max + 1 must be divisible by dnum");
    }
    CkksParams params;
    params.n = n;
    params.l_max = l_max;
    params.k = k;
    params.dnum = dnum;
    params.alpha = (l_max + 1) / dnum;
    params.scale_bits = scale_bits;
    params.bit_size = bit_size;
    params.chain = generate_prime_chain(n, l_max, k, bit_size);
    params.validate();
    return params;
}

namespace {

struct PresetSpec {
    std::size_t log_n, l_max, k, dnum;
    unsigned bit_size;
    unsigned scale_bits = 40;
};

const std::map<std::string, PresetSpec>& preset_table() {
    // Desk-scale "default"; the rest are the evaluation parameter sets, with
    // dnum = L+1 whenever K = 1 so that one special prime covers each slice.
    // set_a has only 54 bits of Q, so its scale leaves room for one product.
    static const std::map<std::string, PresetSpec> table = {
        {"default", {12, 7, 2, 4, 30}},
        {"reference", {16, 44, 1, 45, 28}},
        {"resnet20", {16, 29, 1, 30, 27}},
        {"lr", {16, 38, 1, 39, 27}},
        {"lstm", {15, 25, 1, 26, 27}},
        {"packed_boot", {16, 57, 1, 58, 28}},
        {"set_a", {12, 1, 2, 2, 27, 25}},
        {"set_b", {13, 2, 4, 3, 31}},
        {"set_c", {14, 10, 8, 11, 23}},
    };
    return table;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, spec] : preset_table()) names.push_back(name);
    return names;
}

CkksParams preset(const std::string& name) {
    const auto& table = preset_table();
    auto it = table.find(name);
    if (it == table.end()) throw ParameterError("unknown parameter preset '" + name + "'");
    const auto& s = it->second;
    return make_params(std::size_t{1} << s.log_n, s.l_max, s.k, s.dnum, s.bit_size, s.scale_bits);
}

nlohmann::json to_json(const CkksParams& params) {
    nlohmann::json doc;
    doc["n"] = params.n;
    doc["l_max"] = params.l_max;
    doc["k"] = params.k;
    doc["dnum"] = params.dnum;
    doc["alpha"] = params.alpha;
    doc["scale_bits"] = params.scale_bits;
    doc["bit_size"] = params.bit_size;
    auto primes = [](const std::vector<PrimeInfo>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : v) arr.push_back(std::to_string(p.value));
        return arr;
    };
    doc["q"] = primes(params.chain.q);
    doc["p"] = primes(params.chain.p);
    return doc;
}

CkksParams params_from_json(const nlohmann::json& doc) {
    try {
        CkksParams params;
        params.n = doc.at("n").get<std::size_t>();
        params.l_max = doc.at("l_max").get<std::size_t>();
        params.k = doc.at("k").get<std::size_t>();
        params.dnum = doc.at("dnum").get<std::size_t>();
        params.alpha = doc.value("alpha", params.dnum ? (params.l_max + 1) / params.dnum : 0);
        params.scale_bits = doc.value("scale_bits", 40u);
        params.bit_size = doc.value("bit_size", 30u);
        auto primes = [](const nlohmann::json& arr) {
            std::vector<u32> out;
            for (const auto& s : arr) {
                const u64 v = std::stoull(s.get<std::string>());
                if (v >= (u64{1} << 32)) throw RangeError("prime exceeds 32 bits");
                out.push_back(static_cast<u32>(v));
            }
            return out;
        };
        params.chain = chain_from_primes(params.n, primes(doc.at("q")), primes(doc.at("p")));
        params.validate();
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed parameter document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParameterError(std::string("malformed prime string: ") + e.what());
    }
}

CkksParams load_params(const std::string& preset_or_path) {
    const auto& table = preset_table();
    if (table.count(preset_or_path) != 0) return preset(preset_or_path);
    std::ifstream in(preset_or_path);
    if (!in) throw ParameterError("unknown preset or unreadable file '" + preset_or_path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("invalid JSON: ") + e.what());
    }
    return params_from_json(doc);
}

}  // namespace kfhe
