//! Deterministic synthetic corpora in the "What's Cooking" export schema.
//!
//! The generator mimics the real dataset's shape: 20 cuisines with the same
//! relative recipe counts, a few hundred shared staples, regional ingredient
//! families (East Asian, Mediterranean, Latin, ...), and cuisine-specific
//! signature ingredients padded with filler names up to a target vocabulary
//! size. It exists for pipeline tests and timing runs; it carries no claim
//! about real cuisines.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{Recipe, RecipeId};

/// Recipe counts of the public dataset, in its usual listing order.
pub const CUISINE_COUNTS: [(&str, usize); 20] = [
    ("italian", 7838),
    ("mexican", 6438),
    ("southern_us", 4320),
    ("indian", 3003),
    ("chinese", 2673),
    ("french", 2646),
    ("cajun_creole", 1546),
    ("thai", 1539),
    ("japanese", 1423),
    ("greek", 1175),
    ("spanish", 989),
    ("korean", 830),
    ("vietnamese", 825),
    ("moroccan", 821),
    ("british", 804),
    ("filipino", 755),
    ("irish", 667),
    ("jamaican", 526),
    ("russian", 489),
    ("brazilian", 467),
];

const COMMON: &[&str] = &[
    "salt",
    "onions",
    "garlic",
    "water",
    "sugar",
    "black pepper",
    "eggs",
    "butter",
    "all-purpose flour",
    "vegetable oil",
    "olive oil",
    "pepper",
    "milk",
    "egg",
    "white sugar",
    "tomatoes",
    "lemon juice",
    "kosher salt",
    "carrots",
    "chicken broth",
];

const FAMILIES: &[(&[&str], &[&str])] = &[
    (
        &["japanese", "chinese", "korean", "thai", "vietnamese", "filipino"],
        &[
            "soy sauce",
            "green onions",
            "sesame oil",
            "ginger",
            "rice vinegar",
            "scallions",
            "garlic cloves",
            "rice",
            "shiitake",
            "chinese cabbage",
            "beef sirloin",
            "tofu",
            "fish sauce",
            "oyster sauce",
            "cornstarch",
            "sesame seeds",
        ],
    ),
    (
        &["italian", "french", "greek", "spanish", "moroccan"],
        &[
            "extra-virgin olive oil",
            "fresh parsley",
            "dry white wine",
            "shallots",
            "fresh basil",
            "lemon",
            "capers",
            "dried oregano",
            "red wine vinegar",
            "fresh thyme",
        ],
    ),
    (
        &["mexican", "brazilian", "jamaican", "cajun_creole", "southern_us"],
        &[
            "chili powder",
            "ground cumin",
            "jalapeno chilies",
            "lime",
            "black beans",
            "cayenne pepper",
            "hot sauce",
            "green bell pepper",
            "corn",
            "allspice",
        ],
    ),
    (
        &["british", "irish", "russian", "southern_us", "french"],
        &[
            "unsalted butter",
            "heavy cream",
            "potatoes",
            "baking powder",
            "buttermilk",
            "bacon",
            "cabbage",
            "sour cream",
            "dill",
            "beef stock",
        ],
    ),
    (
        &["indian", "moroccan", "thai"],
        &[
            "garam masala",
            "turmeric",
            "ground coriander",
            "cinnamon sticks",
            "cardamom",
            "cumin seed",
        ],
    ),
];

fn signatures(cuisine: &str) -> &'static [&'static str] {
    match cuisine {
        "japanese" => &[
            "mirin",
            "dashi",
            "nori",
            "wasabi paste",
            "bonito flakes",
            "sake",
            "konnyaku",
            "miso paste",
            "udon",
            "pickled ginger",
        ],
        "french" => &[
            "cognac",
            "calvados",
            "thyme",
            "gruyere cheese",
            "nicoise olives",
            "bouquet garni",
            "fresh tarragon",
            "melted butter",
            "creme fraiche",
            "dijon mustard",
        ],
        "italian" => &[
            "grated parmesan cheese",
            "pecorino romano cheese",
            "prosciutto",
            "marinara sauce",
            "sweet italian sausage",
            "mozzarella cheese",
            "ricotta cheese",
            "pancetta",
        ],
        "mexican" => &[
            "corn tortillas",
            "salsa",
            "tortilla chips",
            "guacamole",
            "poblano peppers",
            "queso fresco",
            "enchilada sauce",
            "refried beans",
        ],
        "chinese" => &[
            "hoisin sauce",
            "shaoxing wine",
            "five spice powder",
            "chinese black vinegar",
            "bok choy",
            "dark soy sauce",
        ],
        "korean" => &["gochujang base", "kimchi", "korean chile flakes", "asian pear"],
        "thai" => &[
            "thai basil",
            "coconut milk",
            "lemongrass",
            "thai red curry paste",
            "galangal",
        ],
        "vietnamese" => &["rice paper", "vietnamese fish sauce", "rice noodles", "fresh mint"],
        "filipino" => &["calamansi juice", "annatto seeds", "banana leaves", "patis"],
        "indian" => &["ghee", "paneer", "curry leaves", "basmati rice", "plain yogurt"],
        "greek" => &[
            "feta cheese crumbles",
            "kalamata olives",
            "greek yogurt",
            "phyllo dough",
        ],
        "spanish" => &["chorizo", "saffron threads", "manchego cheese", "smoked paprika"],
        "moroccan" => &["ras el hanout", "preserved lemon", "harissa", "couscous"],
        "southern_us" => &["grits", "collard greens", "pecans", "cornmeal"],
        "cajun_creole" => &["andouille sausage", "cajun seasoning", "okra", "file powder"],
        "british" => &["suet", "golden syrup", "stilton", "double cream"],
        "irish" => &["irish whiskey", "guinness beer", "irish cheddar", "corned beef"],
        "jamaican" => &["scotch bonnet chile", "jerk seasoning", "rum", "pimentos"],
        "russian" => &["beets", "kefir", "buckwheat", "farmer cheese"],
        "brazilian" => &["cachaca", "manioc flour", "dende oil", "hearts of palm"],
        _ => &[],
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    /// Total recipes; per-cuisine counts keep the public dataset's proportions.
    pub recipes: usize,
    /// Approximate number of distinct ingredients to aim for.
    pub ingredients: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            recipes: 39_774,
            ingredients: 6_714,
            seed: 2018,
        }
    }
}

struct CuisinePool {
    name: &'static str,
    signature: Vec<String>,
    family: Vec<&'static str>,
}

/// JSON record matching the export schema.
#[derive(Serialize)]
pub struct Record {
    pub id: u64,
    pub cuisine: String,
    pub ingredients: Vec<String>,
}

pub fn generate(config: &SyntheticConfig) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let named: usize = COMMON.len()
        + FAMILIES.iter().map(|f| f.1.len()).sum::<usize>()
        + CUISINE_COUNTS.iter().map(|c| signatures(c.0).len()).sum::<usize>();
    let filler_per_cuisine = config.ingredients.saturating_sub(named) / CUISINE_COUNTS.len();

    let pools: Vec<CuisinePool> = CUISINE_COUNTS
        .iter()
        .map(|&(name, _)| {
            let mut signature: Vec<String> = signatures(name).iter().map(|s| s.to_string()).collect();
            signature.extend((0..filler_per_cuisine).map(|i| format!("{} specialty {i}", name.replace('_', " "))));
            let family = FAMILIES
                .iter()
                .filter(|f| f.0.contains(&name))
                .flat_map(|f| f.1.iter().copied())
                .collect();
            CuisinePool {
                name,
                signature,
                family,
            }
        })
        .collect();

    let total: usize = CUISINE_COUNTS.iter().map(|c| c.1).sum();
    let weights = CUISINE_COUNTS.iter().map(|c| c.1 as f64);
    let pick_cuisine = WeightedIndex::new(weights).expect("positive weights");

    let mut records = Vec::with_capacity(config.recipes);
    for i in 0..config.recipes {
        // Cycle through cuisines proportionally for large corpora, randomly for small ones.
        let c = if config.recipes >= total / 4 {
            let mut acc = 0;
            let target = (i * total) / config.recipes;
            CUISINE_COUNTS
                .iter()
                .position(|&(_, n)| {
                    acc += n;
                    target < acc
                })
                .unwrap()
        } else {
            pick_cuisine.sample(&mut rng)
        };
        let pool = &pools[c];
        let len = rng.random_range(4..=18usize);
        let mut ingredients: Vec<String> = Vec::with_capacity(len);
        let push = |name: String, list: &mut Vec<String>| {
            if !list.contains(&name) {
                list.push(name);
            }
        };
        for _ in 0..len {
            let roll: f64 = rng.random();
            let name = if roll < 0.35 {
                // Zipf-like preference for the first, most characteristic items.
                let n = pool.signature.len();
                let idx = ((rng.random::<f64>().powi(3)) * n as f64) as usize;
                pool.signature[idx.min(n - 1)].clone()
            } else if roll < 0.55 && !pool.family.is_empty() {
                pool.family.choose(&mut rng).unwrap().to_string()
            } else if roll < 0.95 {
                let idx = ((rng.random::<f64>().powi(2)) * COMMON.len() as f64) as usize;
                COMMON[idx.min(COMMON.len() - 1)].to_string()
            } else {
                let other = &pools[rng.random_range(0..pools.len())];
                let n = other.signature.len().min(12);
                other.signature[rng.random_range(0..n)].clone()
            };
            push(name, &mut ingredients);
        }
        records.push(Record {
            id: i as u64,
            cuisine: pool.name.to_string(),
            ingredients,
        });
    }
    records
}

/// Generated corpus as parsed recipes.
pub fn recipes(config: &SyntheticConfig) -> Vec<Recipe> {
    generate(config)
        .into_iter()
        .map(|r| Recipe::new(RecipeId::Int(r.id as i64), Some(&r.cuisine), r.ingredients).unwrap())
        .collect()
}

/// Generated corpus serialized as the export's JSON array.
pub fn to_json(config: &SyntheticConfig) -> String {
    serde_json::to_string(&generate(config)).expect("records serialize")
}
