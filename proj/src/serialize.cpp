#include <cstring>
#include <string>

#include "kfhe/ckks.hpp"
#include "kfhe/errors.hpp"

namespace kfhe {

namespace {

constexpr char kMagic[5] = {'T', 'F', 'H', 'E', '1'};
constexpr std::size_t kHeaderSize = sizeof(kMagic) + 1 + 8 + 8;

class Writer {
public:
    void put8(std::uint8_t v) { out_.push_back(v); }
    void put32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void put64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void str(const std::string& s) {
        put32(static_cast<std::uint32_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }
    void poly(const RnsPolynomial& p) {
        put32(static_cast<std::uint32_t>(p.n()));
        put8(p.domain() == Domain::ntt ? 1 : 0);
        put32(static_cast<std::uint32_t>(p.size()));
        for (u32 q : p.basis()) put32(q);
        for (u32 v : p.data()) put32(v);
    }
    void scale(const Scale& s) {
        str(numerator(s).str());
        str(denominator(s).str());
    }

    std::vector<std::uint8_t> finish(ObjectKind kind, const CkksParams& params) const {
        std::vector<std::uint8_t> bytes(kMagic, kMagic + sizeof(kMagic));
        Writer head;
        head.put8(static_cast<std::uint8_t>(kind));
        head.put64(params.hash());
        head.put64(out_.size());
        bytes.insert(bytes.end(), head.out_.begin(), head.out_.end());
        bytes.insert(bytes.end(), out_.begin(), out_.end());
        return bytes;
    }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& bytes, ObjectKind kind, const CkksParams& params)
        : bytes_(bytes) {
        if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
            throw FormatError("missing TFHE1 header");
        }
        pos_ = sizeof(kMagic);
        if (get8() != static_cast<std::uint8_t>(kind)) throw FormatError("unexpected object kind");
        if (get64() != params.hash()) throw FormatError("object was written for different parameters");
        const std::uint64_t length = get64();
        if (length != bytes.size() - kHeaderSize) throw FormatError("payload length mismatch");
    }

    std::uint8_t get8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t get32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t get64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::string str() {
        const std::uint32_t len = get32();
        need(len);
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
        pos_ += len;
        return s;
    }
    RnsPolynomial poly() {
        const std::size_t n = get32();
        const std::uint8_t domain = get8();
        if (domain > 1) throw FormatError("bad domain tag");
        const std::size_t rows = get32();
        if (n > (std::size_t{1} << 20) || rows > 4096) throw FormatError("implausible polynomial shape");
        need(static_cast<u64>(rows) * 4);
        std::vector<u32> basis(rows);
        for (auto& q : basis) q = get32();
        need(static_cast<u64>(rows) * n * 4);
        std::vector<u32> data(rows * n);
        for (auto& v : data) v = get32();
        RnsPolynomial p(n, std::move(basis), domain ? Domain::ntt : Domain::coefficient, std::move(data));
        if (!p.residues_in_range()) throw FormatError("residue outside its prime");
        return p;
    }
    Scale scale() {
        try {
            const BigInt num(str());
            const BigInt den(str());
            if (den <= 0) throw FormatError("bad scale denominator");
            return Scale(num, den);
        } catch (const std::runtime_error& e) {
            throw FormatError(std::string("bad scale: ") + e.what());
        }
    }
    void done() const {
        if (pos_ != bytes_.size()) throw FormatError("trailing bytes after object");
    }

private:
    void need(u64 count) const {
        if (count > bytes_.size() - pos_) throw FormatError("truncated object");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const Ciphertext& ct, const CkksParams& params) {
    Writer w;
    w.put32(static_cast<std::uint32_t>(ct.level));
    w.scale(ct.scale);
    w.poly(ct.b);
    w.poly(ct.a);
    return w.finish(ObjectKind::ciphertext, params);
}

std::vector<std::uint8_t> serialize(const Plaintext& pt, const CkksParams& params) {
    Writer w;
    w.put32(static_cast<std::uint32_t>(pt.level));
    w.scale(pt.scale);
    w.poly(pt.poly);
    return w.finish(ObjectKind::plaintext, params);
}

std::vector<std::uint8_t> serialize(const SecretKey& sk, const CkksParams& params) {
    Writer w;
    w.put32(static_cast<std::uint32_t>(sk.hamming_weight));
    w.put32(static_cast<std::uint32_t>(sk.coeffs.size()));
    for (auto c : sk.coeffs) w.put8(static_cast<std::uint8_t>(c));
    w.poly(sk.s);
    return w.finish(ObjectKind::secret_key, params);
}

std::vector<std::uint8_t> serialize(const PublicKey& pk, const CkksParams& params) {
    Writer w;
    w.poly(pk.b);
    w.poly(pk.a);
    return w.finish(ObjectKind::public_key, params);
}

std::vector<std::uint8_t> serialize(const SwitchingKey& ksk, const CkksParams& params) {
    Writer w;
    w.put32(static_cast<std::uint32_t>(ksk.size()));
    for (std::size_t j = 0; j < ksk.size(); ++j) {
        w.poly(ksk.b[j]);
        w.poly(ksk.a[j]);
    }
    return w.finish(ObjectKind::switching_key, params);
}

Ciphertext deserialize_ciphertext(const std::vector<std::uint8_t>& bytes, const CkksParams& params) {
    Reader r(bytes, ObjectKind::ciphertext, params);
    Ciphertext ct;
    ct.level = r.get32();
    ct.scale = r.scale();
    ct.b = r.poly();
    ct.a = r.poly();
    r.done();
    if (ct.b.basis() != ct.a.basis() || ct.b.domain() != ct.a.domain() || ct.b.size() != ct.level + 1) {
        throw FormatError("inconsistent ciphertext components");
    }
    return ct;
}

Plaintext deserialize_plaintext(const std::vector<std::uint8_t>& bytes, const CkksParams& params) {
    Reader r(bytes, ObjectKind::plaintext, params);
    Plaintext pt;
    pt.level = r.get32();
    pt.scale = r.scale();
    pt.poly = r.poly();
    r.done();
    if (pt.poly.size() != pt.level + 1) throw FormatError("plaintext level does not match its basis");
    return pt;
}

SecretKey deserialize_secret_key(const std::vector<std::uint8_t>& bytes, const CkksParams& params) {
    Reader r(bytes, ObjectKind::secret_key, params);
    SecretKey sk;
    sk.hamming_weight = r.get32();
    const std::size_t count = r.get32();
    sk.coeffs.resize(count);
    for (auto& c : sk.coeffs) {
        c = static_cast<std::int8_t>(r.get8());
        if (c < -1 || c > 1) throw FormatError("secret coefficient is not ternary");
    }
    sk.s = r.poly();
    r.done();
    return sk;
}

PublicKey deserialize_public_key(const std::vector<std::uint8_t>& bytes, const CkksParams& params) {
    Reader r(bytes, ObjectKind::public_key, params);
    PublicKey pk;
    pk.b = r.poly();
    pk.a = r.poly();
    r.done();
    return pk;
}

SwitchingKey deserialize_switching_key(const std::vector<std::uint8_t>& bytes,
                                       const CkksParams& params) {
    Reader r(bytes, ObjectKind::switching_key, params);
    SwitchingKey ksk;
    const std::size_t count = r.get32();
    for (std::size_t j = 0; j < count; ++j) {
        ksk.b.push_back(r.poly());
        ksk.a.push_back(r.poly());
    }
    r.done();
    return ksk;
}

}  // namespace kfhe
