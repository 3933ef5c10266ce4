use std::collections::HashMap;
use std::hash::Hash;
use std::sync::RwLock;

/// Read-mostly concurrent memo table.
pub struct Memo<K, V> {
    map: RwLock<Option<HashMap<K, V>>>,
}

impl<K: Eq + Hash + Clone, V: Clone> Memo<K, V> {
    pub const fn new() -> Self {
        Self { map: RwLock::new(None) }
    }

    pub fn get_or_try<E>(&self, key: K, f: impl FnOnce() -> Result<V, E>) -> Result<V, E> {
        if let Some(v) = self.map.read().expect("memo poisoned").as_ref().and_then(|m| m.get(&key)) {
            return Ok(v.clone());
        }
        let v = f()?;
        let mut guard = self.map.write().expect("memo poisoned");
        guard.get_or_insert_with(HashMap::new).entry(key).or_insert_with(|| v.clone());
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("memo poisoned").as_ref().map_or(0, |m| m.len())
    }
}

impl<K: Eq + Hash + Clone, V: Clone> Default for Memo<K, V> {
    fn default() -> Self {
        Self::new()
    }
}
