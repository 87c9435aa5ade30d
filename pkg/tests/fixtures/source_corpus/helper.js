export const tool = (fn) => fn; // not the target language
