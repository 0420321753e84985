#include "semcom/datagen.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/image_io.hpp"
#include "semcom/rng.hpp"

namespace semcom::datagen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Canvas {
  int h, w;
  std::vector<double> px;  // planar CHW, 3 channels
  Canvas(int h_, int w_) : h(h_), w(w_), px(3 * h_ * w_, 0.0) {}
  double& at(int c, int y, int x) { return px[(c * h + y) * w + x]; }
  void fill(double r, double g, double b) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        at(0, y, x) = r;
        at(1, y, x) = g;
        at(2, y, x) = b;
      }
    }
  }
  void set(int y, int x, const double rgb[3]) {
    if (y < 0 || y >= h || x < 0 || x >= w) return;
    for (int c = 0; c < 3; ++c) at(c, y, x) = rgb[c];
  }
};

void random_color(Rng& rng, double out[3]) {
  for (int c = 0; c < 3; ++c) out[c] = rng.uniform(0.08, 0.92);
}

double color_dist(const double a[3], const double b[3]) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(s);
}

void contrasting_colors(Rng& rng, double bg[3], double fg[3]) {
  random_color(rng, bg);
  do {
    random_color(rng, fg);
  } while (color_dist(bg, fg) < 0.45);
}

void add_noise_and_store(Canvas& cv, Rng& rng, double sigma,
                         imageio::ImageU8& out) {
  out.height = cv.h;
  out.width = cv.w;
  out.channels = 3;
  out.pixels.resize(static_cast<size_t>(cv.h) * cv.w * 3);
  for (int y = 0; y < cv.h; ++y) {
    for (int x = 0; x < cv.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = cv.at(c, y, x) + rng.normal(0.0, sigma);
        v = std::clamp(v, 0.0, 1.0);
        out.pixels[(static_cast<size_t>(y) * cv.w + x) * 3 + c] =
            static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
}

// ---------------------------------------------------------- texture corpus

// Ten visually distinct parametric families; per-image randomness in colors,
// frequency, phase, position and scale keeps the task non-trivial.
void render_texture_class(Canvas& cv, int cls, Rng& rng) {
  double bg[3], fg[3];
  contrasting_colors(rng, bg, fg);
  cv.fill(bg[0], bg[1], bg[2]);
  const int h = cv.h, w = cv.w;
  switch (cls) {
    case 0: {  // horizontal stripes
      const double freq = rng.uniform(2.0, 5.0);
      const double phase = rng.uniform(0.0, 6.283);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (std::sin(freq * 6.283 * y / h + phase) > 0.0) cv.set(y, x, fg);
      break;
    }
    case 1: {  // vertical stripes
      const double freq = rng.uniform(2.0, 5.0);
      const double phase = rng.uniform(0.0, 6.283);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (std::sin(freq * 6.283 * x / w + phase) > 0.0) cv.set(y, x, fg);
      break;
    }
    case 2: {  // diagonal stripes
      const double freq = rng.uniform(2.0, 5.0);
      const double phase = rng.uniform(0.0, 6.283);
      const double dir = rng.uniform() < 0.5 ? 1.0 : -1.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (std::sin(freq * 6.283 * (x + dir * y) / (h + w) + phase) > 0.0)
            cv.set(y, x, fg);
      break;
    }
    case 3: {  // checkerboard
      const int cell = 2 + static_cast<int>(rng.uniform_int(5));
      const int oy = static_cast<int>(rng.uniform_int(cell));
      const int ox = static_cast<int>(rng.uniform_int(cell));
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if ((((y + oy) / cell) + ((x + ox) / cell)) % 2 == 0)
            cv.set(y, x, fg);
      break;
    }
    case 4: {  // filled disc
      const double cy = rng.uniform(0.3, 0.7) * h;
      const double cx = rng.uniform(0.3, 0.7) * w;
      const double r = rng.uniform(0.18, 0.38) * h;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if ((y - cy) * (y - cy) + (x - cx) * (x - cx) < r * r)
            cv.set(y, x, fg);
      break;
    }
    case 5: {  // ring
      const double cy = rng.uniform(0.35, 0.65) * h;
      const double cx = rng.uniform(0.35, 0.65) * w;
      const double r = rng.uniform(0.24, 0.4) * h;
      const double thick = rng.uniform(0.05, 0.12) * h;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double d =
              std::sqrt((y - cy) * (y - cy) + (x - cx) * (x - cx));
          if (std::fabs(d - r) < thick) cv.set(y, x, fg);
        }
      break;
    }
    case 6: {  // axis-aligned rectangle
      const int y0 = static_cast<int>(rng.uniform(0.1, 0.4) * h);
      const int x0 = static_cast<int>(rng.uniform(0.1, 0.4) * w);
      const int y1 = static_cast<int>(rng.uniform(0.6, 0.9) * h);
      const int x1 = static_cast<int>(rng.uniform(0.6, 0.9) * w);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) cv.set(y, x, fg);
      break;
    }
    case 7: {  // triangle (half-plane cut rectangle)
      const double slope = rng.uniform(0.5, 2.0);
      const double off = rng.uniform(-0.2, 0.4) * h;
      const bool flip = rng.uniform() < 0.5;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double lhs = flip ? (w - 1 - x) : x;
          if (y > slope * lhs + off) cv.set(y, x, fg);
        }
      break;
    }
    case 8: {  // soft gaussian blobs
      const int blobs = 2 + static_cast<int>(rng.uniform_int(3));
      for (int b = 0; b < blobs; ++b) {
        const double cy = rng.uniform(0.15, 0.85) * h;
        const double cx = rng.uniform(0.15, 0.85) * w;
        const double s2 = std::pow(rng.uniform(0.08, 0.16) * h, 2.0);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const double g = std::exp(
                -((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (2.0 * s2));
            for (int c = 0; c < 3; ++c)
              cv.at(c, y, x) = cv.at(c, y, x) * (1.0 - g) + fg[c] * g;
          }
      }
      break;
    }
    default: {  // 9: dot lattice
      const int step = 5 + static_cast<int>(rng.uniform_int(4));
      const int r = 1 + static_cast<int>(rng.uniform_int(2));
      const int oy = static_cast<int>(rng.uniform_int(step));
      const int ox = static_cast<int>(rng.uniform_int(step));
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int dy = (y + oy) % step - step / 2;
          const int dx = (x + ox) % step - step / 2;
          if (dy * dy + dx * dx <= r * r) cv.set(y, x, fg);
        }
      break;
    }
  }
}

// ------------------------------------------------------------- face corpus

const std::vector<std::string>& attribute_names_impl() {
  static const std::vector<std::string> names = {
      "5_o_Clock_Shadow", "Arched_Eyebrows", "Attractive", "Bags_Under_Eyes",
      "Bald", "Bangs", "Big_Lips", "Big_Nose", "Black_Hair", "Blond_Hair",
      "Blurry", "Brown_Hair", "Bushy_Eyebrows", "Chubby", "Double_Chin",
      "Eyeglasses", "Goatee", "Gray_Hair", "Heavy_Makeup", "High_Cheekbones",
      "Male", "Mouth_Slightly_Open", "Mustache", "Narrow_Eyes", "No_Beard",
      "Oval_Face", "Pale_Skin", "Pointy_Nose", "Receding_Hairline",
      "Rosy_Cheeks", "Sideburns", "Smiling", "Straight_Hair", "Wavy_Hair",
      "Wearing_Earrings", "Wearing_Hat", "Wearing_Lipstick",
      "Wearing_Necklace", "Wearing_Necktie", "Young"};
  return names;
}

int attr_index(const std::string& name) {
  const auto& names = attribute_names_impl();
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw ValidationError("datagen: unknown attribute " + name);
}

void fill_ellipse(Canvas& cv, double cy, double cx, double ry, double rx,
                  const double rgb[3]) {
  for (int y = 0; y < cv.h; ++y)
    for (int x = 0; x < cv.w; ++x) {
      const double dy = (y - cy) / ry, dx = (x - cx) / rx;
      if (dy * dy + dx * dx <= 1.0) cv.set(y, x, rgb);
    }
}

std::vector<uint8_t> render_face(Canvas& cv, Rng& rng) {
  const auto& names = attribute_names_impl();
  std::vector<uint8_t> attrs(names.size());
  for (auto& a : attrs) a = rng.uniform() < 0.5 ? 1 : 0;
  // Keep the obviously-coupled pairs coherent.
  attrs[attr_index("Straight_Hair")] = attrs[attr_index("Wavy_Hair")] ? 0 : 1;
  attrs[attr_index("No_Beard")] =
      (attrs[attr_index("Mustache")] || attrs[attr_index("Goatee")]) ? 0 : 1;

  const bool smiling = attrs[attr_index("Smiling")];
  const bool mustache = attrs[attr_index("Mustache")];
  const bool wavy = attrs[attr_index("Wavy_Hair")];
  const bool male = attrs[attr_index("Male")];
  const bool glasses = attrs[attr_index("Eyeglasses")];
  const bool pale = attrs[attr_index("Pale_Skin")];
  const bool black_hair = attrs[attr_index("Black_Hair")];
  const bool blond = attrs[attr_index("Blond_Hair")];

  const int h = cv.h, w = cv.w;
  // background gradient
  double bg0[3], bg1[3];
  random_color(rng, bg0);
  random_color(rng, bg1);
  for (int y = 0; y < h; ++y) {
    const double t = static_cast<double>(y) / h;
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        cv.at(c, y, x) = bg0[c] * (1.0 - t) + bg1[c] * t;
  }

  const double cy = h * rng.uniform(0.52, 0.58);
  const double cx = w * rng.uniform(0.46, 0.54);
  const double face_ry = h * rng.uniform(0.30, 0.36);
  const double face_rx = w * (male ? rng.uniform(0.26, 0.31)
                                   : rng.uniform(0.20, 0.25));

  // hair block behind the face
  double hair[3];
  if (black_hair) {
    hair[0] = hair[1] = hair[2] = rng.uniform(0.02, 0.12);
  } else if (blond) {
    hair[0] = rng.uniform(0.75, 0.9);
    hair[1] = rng.uniform(0.62, 0.78);
    hair[2] = rng.uniform(0.2, 0.35);
  } else {
    hair[0] = rng.uniform(0.3, 0.5);
    hair[1] = rng.uniform(0.15, 0.3);
    hair[2] = rng.uniform(0.05, 0.2);
  }
  const double hair_top = cy - face_ry * 1.25;
  const double hair_bottom = cy + face_ry * 0.1;
  const double strand_freq = rng.uniform(3.0, 5.0);
  const double strand_amp = wavy ? rng.uniform(2.5, 4.0) : 0.0;
  const double strand_phase = rng.uniform(0.0, 6.283);
  for (int y = std::max(0, static_cast<int>(hair_top)); y < hair_bottom; ++y) {
    for (int x = 0; x < w; ++x) {
      // hair silhouette: wider than the face, wavy edges when wavy
      const double wobble =
          strand_amp * std::sin(strand_freq * 6.283 * y / h + strand_phase +
                                0.35 * x);
      const double half_w = face_rx * 1.45 + wobble;
      if (std::fabs(x - cx) < half_w) {
        // strand texture: thin dark/light modulation along x
        const double tex =
            wavy ? 0.12 * std::sin(1.1 * x + 4.0 * std::sin(0.25 * y))
                 : 0.12 * std::sin(1.9 * x);
        double rgb[3] = {std::clamp(hair[0] + tex, 0.0, 1.0),
                         std::clamp(hair[1] + tex, 0.0, 1.0),
                         std::clamp(hair[2] + tex, 0.0, 1.0)};
        cv.set(y, x, rgb);
      }
    }
  }

  // face
  double skin[3];
  const double tone = pale ? rng.uniform(0.82, 0.95) : rng.uniform(0.45, 0.75);
  skin[0] = std::clamp(tone + 0.08, 0.0, 1.0);
  skin[1] = tone * rng.uniform(0.78, 0.88);
  skin[2] = tone * rng.uniform(0.6, 0.72);
  fill_ellipse(cv, cy, cx, face_ry, face_rx, skin);

  // eyes
  const double eye_y = cy - face_ry * 0.25;
  const double eye_dx = face_rx * 0.45;
  const double eye_r = h * 0.028 + rng.uniform(0.0, 1.2);
  double dark[3] = {0.08, 0.07, 0.1};
  double white[3] = {0.93, 0.93, 0.95};
  for (int side = -1; side <= 1; side += 2) {
    const double ex = cx + side * eye_dx;
    fill_ellipse(cv, eye_y, ex, eye_r * 1.15, eye_r * 1.8, white);
    fill_ellipse(cv, eye_y, ex, eye_r, eye_r, dark);
  }
  if (glasses) {
    double frame[3] = {0.05, 0.05, 0.05};
    for (int side = -1; side <= 1; side += 2) {
      const double ex = cx + side * eye_dx;
      const int ry = static_cast<int>(eye_r * 2.2);
      const int rx = static_cast<int>(eye_r * 2.8);
      for (int t = -rx; t <= rx; ++t) {
        cv.set(static_cast<int>(eye_y) - ry, static_cast<int>(ex) + t, frame);
        cv.set(static_cast<int>(eye_y) + ry, static_cast<int>(ex) + t, frame);
      }
      for (int t = -ry; t <= ry; ++t) {
        cv.set(static_cast<int>(eye_y) + t, static_cast<int>(ex) - rx, frame);
        cv.set(static_cast<int>(eye_y) + t, static_cast<int>(ex) + rx, frame);
      }
    }
    // bridge
    for (int x = static_cast<int>(cx - eye_dx + eye_r * 2.8);
         x <= static_cast<int>(cx + eye_dx - eye_r * 2.8); ++x) {
      cv.set(static_cast<int>(eye_y), x, frame);
    }
  }

  // nose
  double nose[3] = {skin[0] * 0.75, skin[1] * 0.72, skin[2] * 0.7};
  const double nose_y = cy + face_ry * 0.12;
  for (int t = 0; t < static_cast<int>(face_ry * 0.3); ++t) {
    cv.set(static_cast<int>(nose_y - t), static_cast<int>(cx), nose);
    cv.set(static_cast<int>(nose_y - t), static_cast<int>(cx) + 1, nose);
  }

  // mouth: upward arc when smiling, flat/slightly down otherwise
  double lip[3] = {0.62, 0.15, 0.2};
  const double mouth_y = cy + face_ry * 0.5;
  const double mouth_half = face_rx * (smiling ? 0.55 : 0.4);
  const double curve = smiling ? rng.uniform(0.25, 0.4)
                               : rng.uniform(-0.08, 0.05);
  for (int t = static_cast<int>(-mouth_half); t <= mouth_half; ++t) {
    const double u = t / mouth_half;
    const int yy =
        static_cast<int>(mouth_y - curve * (1.0 - u * u) * face_ry * 0.35);
    cv.set(yy, static_cast<int>(cx) + t, lip);
    cv.set(yy + 1, static_cast<int>(cx) + t, lip);
  }

  // mustache: dark bar above the mouth
  if (mustache) {
    double mcol[3] = {0.09, 0.06, 0.04};
    const int my = static_cast<int>(mouth_y - face_ry * 0.22);
    const int half = static_cast<int>(face_rx * 0.45);
    const int thick = 1 + static_cast<int>(face_ry * 0.07);
    for (int yy = my - thick; yy <= my + thick; ++yy)
      for (int t = -half; t <= half; ++t)
        cv.set(yy, static_cast<int>(cx) + t, mcol);
  }
  return attrs;
}

// ----------------------------------------------------------------- writer

void write_split(const std::string& kind, const fs::path& split_dir,
                 size_t count, uint64_t seed, uint64_t split_tag) {
  fs::create_directories(split_dir / "images");
  std::ofstream manifest(split_dir / "manifest.jsonl");
  if (!manifest) {
    throw NotFoundError("datagen: cannot write manifest in " +
                        split_dir.string());
  }
  const int dim = kind == "cifar10" ? 32 : 64;
  for (size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed({seed, split_tag, static_cast<uint64_t>(i),
                         hash_str(kind.c_str())}));
    Canvas cv(dim, dim);
    imageio::ImageU8 img;
    json rec;
    char name[32];
    std::snprintf(name, sizeof(name), "images/%06zu.ppm", i);
    rec["path"] = name;
    if (kind == "cifar10") {
      const int cls = static_cast<int>(i % 10);  // balanced classes
      render_texture_class(cv, cls, rng);
      add_noise_and_store(cv, rng, 0.035, img);
      rec["label"] = cls;
    } else {
      const auto attrs = render_face(cv, rng);
      add_noise_and_store(cv, rng, 0.03, img);
      rec["attrs"] = attrs;
    }
    imageio::write_ppm(split_dir / name, img);
    manifest << rec.dump() << "\n";
  }
}

}  // namespace

const std::vector<std::string>& face_attribute_names() {
  return attribute_names_impl();
}

void generate_corpus(const std::string& kind, const fs::path& root,
                     const GenOptions& opt) {
  if (kind != "cifar10" && kind != "celeba") {
    throw ValidationError("datagen: unknown corpus kind " + kind);
  }
  const size_t train_default = kind == "cifar10" ? 50000 : 20000;
  const size_t test_default = kind == "cifar10" ? 10000 : 4000;
  const size_t n_train = opt.train_count ? opt.train_count : train_default;
  const size_t n_test = opt.test_count ? opt.test_count : test_default;

  const fs::path corpus_dir = root / kind;
  fs::create_directories(corpus_dir);
  json meta;
  meta["name"] = kind;
  meta["height"] = kind == "cifar10" ? 32 : 64;
  meta["width"] = kind == "cifar10" ? 32 : 64;
  meta["channels"] = 3;
  if (kind == "cifar10") {
    meta["num_classes"] = 10;
  } else {
    meta["num_classes"] = 0;
    meta["attributes"] = face_attribute_names();
  }
  std::ofstream(corpus_dir / "corpus.json") << meta.dump(2) << "\n";

  write_split(kind, corpus_dir / "train", n_train, opt.seed, hash_str("train"));
  write_split(kind, corpus_dir / "test", n_test, opt.seed, hash_str("test"));
}

}  // namespace semcom::datagen
