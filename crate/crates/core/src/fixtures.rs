//! The Pokémon worked example: ten novice and ten expert games, split on the
//! player's rank.

use std::sync::Arc;

use crate::error::Result;
use crate::relation::{load_relation, split_by_property, Relation, Split};
use crate::schema::Schema;

pub const POKEMON_SCHEMA: &str = r#"dimensions = ["Tier", "Player", "Opponent"]

[[criteria]]
name = "Rarity"
symbol = "R"
direction = "min"

[[criteria]]
name = "Duration"
symbol = "D"
direction = "min"

[[criteria]]
name = "Loss"
symbol = "L"
direction = "min"

[[measures]]
name = "Duration"
side1 = "D1"
side2 = "D2"

[[measures]]
name = "Loss"
side1 = "L1"
side2 = "L2"

[split]
column = "Rank"
first = "N"
second = "E"
"#;

pub const POKEMON_CSV: &str = "\
Tier,Player,Opponent,Rank,Rarity,Duration,Loss
UU,A,D,N,5,25,30
OU,B,E,N,4,65,50
OU,B,F,N,4,35,40
OU,B,A,N,4,85,40
OU,C,A,N,1,95,60
OU,C,B,N,1,35,50
OU,D,B,N,9,85,60
OU,D,C,N,9,85,70
UU,E,D,N,7,25,50
UU,E,E,N,7,65,30
UU,A,D,E,5,20,30
OU,B,E,E,4,60,45
OU,B,F,E,4,30,30
OU,B,A,E,4,80,50
OU,C,A,E,1,90,70
OU,C,B,E,1,30,30
OU,D,B,E,9,80,50
OU,D,C,E,9,90,70
UU,E,D,E,7,20,30
UU,E,E,E,7,60,45
";

pub fn pokemon_schema() -> Arc<Schema> {
    Arc::new(Schema::from_toml(POKEMON_SCHEMA).expect("embedded schema is valid"))
}

/// All twenty games.
pub fn pokemon() -> Relation {
    load_relation(POKEMON_CSV.as_bytes(), pokemon_schema()).expect("embedded table is valid")
}

/// The novice (first) and expert (second) relations, each numbered 1..10.
pub fn pokemon_split() -> Result<Split> {
    split_by_property(&pokemon())
}
