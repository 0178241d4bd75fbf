//! Non-neural generation: apply a slot's edit trees directly.

use crate::error::Result;
use crate::slots::SlotSystem;

use super::complete::FormGenerator;

/// Apply the slot's trees in descending coverage order and return the first
/// output; `None` when the slot is unknown or no tree applies.
pub fn fallback_generate(sys: &SlotSystem, lemma: &str, slot: usize) -> Option<String> {
    sys.slot(slot)?.trees.iter().find_map(|t| t.apply(lemma))
}

/// [`fallback_generate`] as a total generator: the lemma itself is returned
/// when no tree applies.
#[derive(Clone, Debug)]
pub struct TreeGenerator<'a> {
    pub system: &'a SlotSystem,
}

impl<'a> TreeGenerator<'a> {
    pub fn new(system: &'a SlotSystem) -> Self {
        TreeGenerator { system }
    }
}

impl FormGenerator for TreeGenerator<'_> {
    fn generate_form(&self, lemma: &str, slot: usize) -> Result<String> {
        Ok(fallback_generate(self.system, lemma, slot).unwrap_or_else(|| lemma.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::edittree::EditTree;
    use crate::slots::Slot;

    fn system(trees: Vec<EditTree>) -> SlotSystem {
        SlotSystem {
            slots: vec![Slot {
                id: 1,
                trees,
                coverage: BTreeMap::new(),
            }],
        }
    }

    #[test]
    fn suffix_tree_applies() {
        let sys = system(vec![EditTree::build("walk", "walked")]);
        assert_eq!(fallback_generate(&sys, "jump", 1).as_deref(), Some("jumped"));
        assert_eq!(fallback_generate(&sys, "jump", 2), None);
    }

    #[test]
    fn inapplicable_tree_fails() {
        let sys = system(vec![EditTree::replace("a", "b")]);
        assert_eq!(fallback_generate(&sys, "c", 1), None);
        assert_eq!(TreeGenerator::new(&sys).generate_form("c", 1).unwrap(), "c");
    }

    #[test]
    fn most_covering_tree_first() {
        let sys = system(vec![EditTree::build("walk", "walked"), EditTree::build("walk", "walks")]);
        assert_eq!(fallback_generate(&sys, "jump", 1).as_deref(), Some("jumped"));
        let sys = system(vec![EditTree::build("walk", "walks"), EditTree::build("walk", "walked")]);
        assert_eq!(fallback_generate(&sys, "jump", 1).as_deref(), Some("jumps"));
    }

    #[test]
    fn falls_through_to_later_trees() {
        let sys = system(vec![EditTree::replace("a", "b"), EditTree::build("walk", "walked")]);
        assert_eq!(fallback_generate(&sys, "jump", 1).as_deref(), Some("jumped"));
    }
}
